#include "poslab/errors.hpp"

namespace poslab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::exponent_undefined: return "exponent-undefined";
        case ErrorKind::coefficient_evaluation: return "coefficient-evaluation";
        case ErrorKind::not_elliptic: return "not-elliptic";
        case ErrorKind::not_real_diagonalizable: return "not-real-diagonalizable";
        case ErrorKind::singular_transform: return "singular-transform";
        case ErrorKind::not_nilpotent: return "not-nilpotent";
        case ErrorKind::not_idempotent: return "not-idempotent";
        case ErrorKind::integration_stalled: return "integration-stalled";
        case ErrorKind::unknown_kind: return "unknown-kind";
        case ErrorKind::empty_window: return "empty-window";
        case ErrorKind::certificate_evaluation: return "certificate-evaluation";
        case ErrorKind::invalid_resolution: return "invalid-resolution";
        case ErrorKind::blow_up_or_unstable: return "blow-up-or-unstable";
        case ErrorKind::timestep_too_large: return "timestep-too-large";
        case ErrorKind::window_exceeded: return "window-exceeded";
        case ErrorKind::kernel_too_wide: return "kernel-too-wide";
        case ErrorKind::grid_mismatch: return "grid-mismatch";
        case ErrorKind::unknown_scenario: return "unknown-scenario";
        case ErrorKind::config: return "config";
        case ErrorKind::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

LabError::LabError(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

}  // namespace poslab
