// Error types and the warning sink shared by the whole library.
#ifndef GAZEFORGE_ERROR_HPP
#define GAZEFORGE_ERROR_HPP

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gazeforge {

enum class ErrorCode {
  shape,       // dimension / size mismatch
  domain,      // value outside the admissible set (negative mass, bad label, ...)
  parameter,   // invalid tuning parameter (sigma <= 0, alpha outside [0,1], ...)
  empty,       // required input is empty
  io,          // unreadable / malformed file
  validation,  // configuration violates invariants
  usage,       // command line misuse
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::shape: return "shape";
    case ErrorCode::domain: return "domain";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::empty: return "empty";
    case ErrorCode::io: return "io";
    case ErrorCode::validation: return "validation";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Error(ErrorCode code, const std::string& what, std::vector<std::string> details)
      : std::runtime_error(what), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending fields, paths, ids; whatever the caller may want to list.
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

// Warnings go through a process-wide sink so the CLI can collect them and tests can silence them.
using WarningSink = std::function<void(std::string_view)>;

namespace detail {
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}
}  // namespace detail

inline WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(detail::warning_mutex());
  return std::exchange(detail::warning_sink(), std::move(sink));
}

inline void warn(std::string_view msg) {
  std::lock_guard lock(detail::warning_mutex());
  if (detail::warning_sink()) detail::warning_sink()(msg);
}

// RAII capture of warnings, mostly for tests.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture()
      : previous_(set_warning_sink([this](std::string_view m) { messages_.emplace_back(m); })) {}
  ~ScopedWarningCapture() { set_warning_sink(std::move(previous_)); }
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

}  // namespace gazeforge

#endif  // GAZEFORGE_ERROR_HPP
