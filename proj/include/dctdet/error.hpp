#pragma once

#include <stdexcept>
#include <string>

namespace dctdet {

// Categories map one-to-one onto CLI exit codes (see cli::exit_code).
enum class ErrorKind {
  kUsage,        // bad arguments or API precondition
  kInput,        // malformed or inconsistent input data
  kUnsupported,  // well-formed input using a feature outside baseline scope
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dctdet
