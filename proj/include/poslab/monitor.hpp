#pragma once

#include "poslab/grid.hpp"
#include "poslab/transform.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace poslab {

/// Componentwise max(-v, 0).
Vector negative_part(const Vector& v);
std::vector<double> negative_part(const std::vector<double>& values);

enum class PositivityVerdict { nonnegative, violated };

std::string to_string(PositivityVerdict v);

struct Violation {
    double time = 0.0;
    int component = 0;  ///< 0-based
    Point location{};
    double value = 0.0;
};

struct PositivityReport {
    PositivityVerdict verdict = PositivityVerdict::nonnegative;
    double tol = 0.0;
    std::vector<double> component_min;      ///< over all nodes and stamps
    std::vector<double> component_min_time;
    std::optional<Violation> violation;      ///< most negative node at the first offending stamp
    std::vector<double> times;
    std::vector<double> energy;              ///< e(t) = int |v^-|^2 dx
    std::optional<double> gronwall_ratio;    ///< max forward-difference e'/e where e > 1e-14

    // transformed_monitor only
    bool transformed = false;
    double inverse_window = kInfinity;       ///< t_pos of the certificate
    std::optional<double> source_min_in_window;  ///< min of W over stamps with t <= t_pos

    std::optional<double> t_neg() const {
        return violation ? std::optional<double>(violation->time) : std::nullopt;
    }
    double overall_min() const;
};

/// 10 (h^2 + dt)(1 + max|psi0|) with h the largest spacing.
double default_tolerance(const Grid& grid, double dt, double max_abs_initial);

PositivityReport monitor(const FieldTrajectory& traj, double tol);

/// Monitor J(x,t) W(x,t); also reports the inverse-positivity window.
PositivityReport transformed_monitor(const FieldTrajectory& W, const TransformCertificate& cert, double tol);

/// t,energy rows with the schema line.
void write_energy_csv(std::ostream& os, const PositivityReport& report);

}  // namespace poslab
