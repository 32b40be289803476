#pragma once

#include <stdexcept>
#include <string>

namespace bvm {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorCategory : int {
  Configuration = 1,
  Numerical = 2,
  RareEvent = 3,
  IllPosed = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::Configuration, what) {}
};

// Shape and domain errors are contract violations by the caller; they share
// the configuration exit code.
struct ShapeError : Error {
  explicit ShapeError(const std::string& what)
      : Error(ErrorCategory::Configuration, "shape error: " + what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::Configuration, "domain error: " + what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::Numerical, what) {}
};

struct RareEventError : Error {
  explicit RareEventError(const std::string& what)
      : Error(ErrorCategory::RareEvent, what) {}
};

struct IllPosedError : Error {
  explicit IllPosedError(const std::string& what)
      : Error(ErrorCategory::IllPosed, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what)
      : Error(ErrorCategory::Configuration, "I/O error: " + what) {}
};

}  // namespace bvm
