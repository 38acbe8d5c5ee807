#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace poip {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (JSON instance, checkpoint, plan...).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a contract (bad ids, exponent 0, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or usage (unknown solver name, conflicting flags, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds a hard capacity limit (e.g. enumeration width).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Operation not supported for this input (e.g. solving continuous variables).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// An interval computation met an infinite bound it cannot tighten.
class UnboundedError : public Error {
 public:
  using Error::Error;
};

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, ErrorLevel = 3, Off = 4 };

/// Current log level; read once from the POIP_LOG environment variable
/// (debug|info|warn|error|off), defaulting to warn.
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);
inline void log_debug(const std::string& m) { log_message(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log_message(LogLevel::ErrorLevel, m); }

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sorts the buffer ascending and accumulates left to right. The result
/// depends only on the multiset of inputs, never on their arrival order,
/// which pins a canonical FP reduction order for equivariance checks.
inline double sorted_sum(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end());
  double acc = 0.0;
  for (double v : buf) acc += v;
  return acc;
}

}  // namespace poip
