#include "leo/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace leo::log {
namespace {

Level parse_env() {
  const char* env = std::getenv("LEO_LOG");
  if (!env) return Level::warn;
  const std::string v(env);
  if (v == "quiet" || v == "0") return Level::quiet;
  if (v == "info" || v == "2") return Level::info;
  if (v == "debug" || v == "3") return Level::debug;
  return Level::warn;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(parse_env())};
  return lvl;
}

std::mutex& out_mutex() {
  static std::mutex m;
  return m;
}

void emit(Level at, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(at) > current().load()) return;
  std::lock_guard lock(out_mutex());
  std::cerr << "[leo " << tag << "] " << msg << '\n';
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }

}  // namespace leo::log
