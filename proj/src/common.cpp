#include "poip/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace poip {

static LogLevel parse_level(const char* s) {
  if (s == nullptr) return LogLevel::Warn;
  if (std::strcmp(s, "debug") == 0) return LogLevel::Debug;
  if (std::strcmp(s, "info") == 0) return LogLevel::Info;
  if (std::strcmp(s, "warn") == 0) return LogLevel::Warn;
  if (std::strcmp(s, "error") == 0) return LogLevel::ErrorLevel;
  if (std::strcmp(s, "off") == 0) return LogLevel::Off;
  return LogLevel::Warn;
}

LogLevel log_level() {
  static LogLevel level = parse_level(std::getenv("POIP_LOG"));
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  if (level < log_level()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace poip
