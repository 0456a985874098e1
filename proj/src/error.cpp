#include "pfl/error.hpp"

#include <cmath>

namespace pfl {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_parameter: return "invalid_parameter";
        case ErrorKind::no_phase_contrast: return "no_phase_contrast";
        case ErrorKind::aliasing: return "aliasing";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::flat_field: return "flat_field";
        case ErrorKind::spot_count: return "spot_count";
        case ErrorKind::unresolvable: return "unresolvable";
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::divide_by_zero: return "divide_by_zero";
        case ErrorKind::schema: return "schema";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw Error(ErrorKind::invalid_parameter,
                    std::string(name) + " must be finite and > 0");
    }
}

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::invalid_parameter, std::string(name) + " must be finite");
    }
}

}  // namespace pfl
