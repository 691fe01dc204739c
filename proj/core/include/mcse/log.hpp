#pragma once

#include <string_view>

namespace mcse {

// Warnings go to std::clog unless silenced (tests and long studies silence them).
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);
bool warnings_enabled();

}  // namespace mcse
