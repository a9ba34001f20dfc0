#include "core/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sgarch {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};
std::mutex g_mutex;

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::cerr << "sgarch " << tag << ": " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warn(std::string_view message) {
  if (g_level.load() >= static_cast<int>(LogLevel::warn)) emit("warning", message);
}

void log_info(std::string_view message) {
  if (g_level.load() >= static_cast<int>(LogLevel::info)) emit("info", message);
}

}  // namespace sgarch
