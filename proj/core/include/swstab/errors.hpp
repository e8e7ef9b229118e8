#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace swstab {

/// Broad failure categories. Tools map these to process exit codes, so the
/// split matters: InvalidInput covers malformed or inconsistent user data,
/// Numerical covers conditions detected during computation that make a
/// requested quantity meaningless (defective endpoints, eigenvalues on the
/// imaginary axis, and the like).
enum class ErrorCategory {
  InvalidInput,
  Numerical,
};

/// Exception carrying a stable machine-readable code alongside the message.
/// Codes are short PascalCase tokens such as "CyclicGraph" or
/// "DefectiveEndpoint"; they end up verbatim in reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string code, const std::string& message)
      : std::runtime_error(message), category_(category), code_(std::move(code)) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
  [[nodiscard]] const std::string& code() const noexcept { return code_; }

 private:
  ErrorCategory category_;
  std::string code_;
};

[[noreturn]] inline void throw_input(const std::string& code, const std::string& message) {
  throw Error(ErrorCategory::InvalidInput, code, message);
}

[[noreturn]] inline void throw_numerical(const std::string& code, const std::string& message) {
  throw Error(ErrorCategory::Numerical, code, message);
}

}  // namespace swstab
