#include "ace/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace ace::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level lvl, std::string_view message) {
  if (lvl < g_level.load()) return;
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(g_mutex);
  std::cerr << "[ace " << names[int(lvl)] << "] " << message << '\n';
}

}  // namespace ace::log
