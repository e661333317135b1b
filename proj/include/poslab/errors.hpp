#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poslab {

/// Failure categories shared by every module. The string form is what the
/// CLI and the run reports print.
enum class ErrorKind {
    exponent_undefined,
    coefficient_evaluation,
    not_elliptic,
    not_real_diagonalizable,
    singular_transform,
    not_nilpotent,
    not_idempotent,
    integration_stalled,
    unknown_kind,
    empty_window,
    certificate_evaluation,
    invalid_resolution,
    blow_up_or_unstable,
    timestep_too_large,
    window_exceeded,
    kernel_too_wide,
    grid_mismatch,
    unknown_scenario,
    config,
    invalid_argument,
};

std::string_view to_string(ErrorKind kind);

class LabError : public std::runtime_error {
public:
    LabError(ErrorKind kind, const std::string& detail);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

}  // namespace poslab
