#pragma once

#include <stdexcept>
#include <string>

namespace planforge {

enum class ErrorKind {
  Validation,
  Parse,
  Size,
  Transport,
  StrictReplay,
  Scoring,
  Selection,
  Extraction,
  Assembly,
  RatingParse,
  Dependency,
  StaleInput,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Size: return "size";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::StrictReplay: return "strict-replay";
    case ErrorKind::Scoring: return "scoring";
    case ErrorKind::Selection: return "selection";
    case ErrorKind::Extraction: return "extraction";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::RatingParse: return "rating-parse";
    case ErrorKind::Dependency: return "dependency";
    case ErrorKind::StaleInput: return "stale-input";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CLI exit codes: 0 ok, 2 validation, 3 dependency, 4 transport.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Transport:
    case ErrorKind::StrictReplay:
      return 4;
    case ErrorKind::Dependency:
    case ErrorKind::StaleInput:
      return 3;
    default:
      return 2;
  }
}

}  // namespace planforge
