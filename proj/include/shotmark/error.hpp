#pragma once

#include <stdexcept>
#include <string>

namespace shotmark {

enum class ErrorKind {
  InvalidArgument,
  Degenerate,
  NoWatermarkFound,
  LocalizationFailed,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Degenerate: return "degenerate geometry";
    case ErrorKind::NoWatermarkFound: return "no watermark found";
    case ErrorKind::LocalizationFailed: return "localization failed";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::InvalidArgument, what);
}

} // namespace shotmark
