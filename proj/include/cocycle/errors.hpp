#pragma once

#include <stdexcept>
#include <string>

namespace cocycle {

/// Raised when an input violates an operation's precondition.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(const std::string& operation, const std::string& what)
        : std::invalid_argument(operation + ": " + what), operation_(operation) {}

    const std::string& operation() const noexcept { return operation_; }

private:
    std::string operation_;
};

/// Raised when a computation breaks down numerically (degenerate frame, non-finite draw).
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& operation, const std::string& what)
        : std::runtime_error(operation + ": " + what), operation_(operation) {}

    const std::string& operation() const noexcept { return operation_; }

private:
    std::string operation_;
};

}  // namespace cocycle
