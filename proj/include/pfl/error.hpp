#pragma once

#include <stdexcept>
#include <string>

namespace pfl {

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
    invalid_parameter,
    no_phase_contrast,
    aliasing,
    convergence,
    flat_field,
    spot_count,
    unresolvable,
    invalid_input,
    divide_by_zero,
    schema,
    parse,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by iterative solvers; carries the residual measure at the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double residual)
        : Error(ErrorKind::convergence, message), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Throws invalid_parameter unless `value` is finite and strictly positive.
void require_positive(double value, const char* name);
/// Throws invalid_parameter unless `value` is finite.
void require_finite(double value, const char* name);

}  // namespace pfl
