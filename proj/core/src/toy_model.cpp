#include "mcse/toy_model.hpp"

#include "mcse/error.hpp"

namespace mcse {

void ToyData::validate() const {
  if (K < 3) throw Error("toy model needs K >= 3 for a proper posterior");
  if (!(ss > 0.0)) throw Error("toy model needs a positive sum of squares");
}

std::pair<double, double> toy_true_means(const ToyData& data) {
  data.validate();
  if (data.K <= 4) throw Error("posterior mean of lambda is undefined for K <= 4");
  return {data.y_bar, data.ss / (data.K - 4)};
}

ToyState toy_gibbs_step(const ToyState& state, const ToyData& data, RngStream& rng) {
  const double K = data.K;
  const double dev = data.y_bar - state.mu;
  ToyState next;
  next.lambda = draw_inverse_gamma(rng, {(K - 1.0) / 2.0, (data.ss + K * dev * dev) / 2.0});
  next.mu = draw_normal(rng, data.y_bar, next.lambda / K);
  return next;
}

ToyState toy_exact_draw(const ToyData& data, RngStream& rng) {
  data.validate();
  const double K = data.K;
  ToyState s;
  s.lambda = draw_inverse_gamma(rng, {(K - 2.0) / 2.0, data.ss / 2.0});
  s.mu = draw_normal(rng, data.y_bar, s.lambda / K);
  return s;
}

}  // namespace mcse
