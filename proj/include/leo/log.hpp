#pragma once

#include <string_view>

namespace leo::log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity comes from LEO_LOG (quiet|warn|info|debug or 0-3); default warn.
Level level();
void set_level(Level lvl);

void warn(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace leo::log
