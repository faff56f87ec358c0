#pragma once

#include <stdexcept>
#include <string>

namespace fcgan {

enum class ErrorKind {
  kShape,      // tensor dimensions disagree with an operation's contract
  kValue,      // argument outside its documented domain
  kNonFinite,  // NaN or Inf reached a checked boundary
  kIo,         // filesystem or codec failure
  kFormat,     // malformed checkpoint, manifest or config content
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kValue: return "value";
    case ErrorKind::kNonFinite: return "non-finite";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
  }
  return "unknown";
}

/// Every failure raised by the library. The message is prefixed with the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fcgan
