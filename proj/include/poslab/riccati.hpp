#pragma once

#include "poslab/linalg.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace poslab {

/// 2x2 coefficient matrix as a function of time.
using TimeMatrix = std::function<Matrix(double)>;

/// Which entry of the generator the scalar equation drives.
enum class RiccatiKind {
    nilpotent,   ///< N = [[0,b],[0,0]]:  b' = g21 b^2 + (g11-g22) b - g12
    idempotent,  ///< N = [[1,0],[c,0]]:  c' = (e-1) g12 c^2 - (g11-g22) c - g21/(e-1)
};

enum class RiccatiClass { constant, converges_to_root, blow_up, leaves_sign_window, unresolved };

std::string to_string(RiccatiClass c);

struct RiccatiOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-11;
    double magnitude_cap = 1e8;
    double blow_up_time_tol = 1e-10;
    double root_tol = 1e-6;
    double initial_step = 1e-3;
    double max_step = 0.05;
    double min_step = 1e-14;
};

/// y' = alpha(t) y^2 + beta(t) y + gamma(t)
struct RiccatiRhs {
    std::function<double(double)> alpha;
    std::function<double(double)> beta;
    std::function<double(double)> gamma;

    double operator()(double t, double y) const { return (alpha(t) * y + beta(t)) * y + gamma(t); }
};

RiccatiRhs riccati_rhs(RiccatiKind kind, TimeMatrix g);

class RiccatiSolution {
public:
    RiccatiKind kind = RiccatiKind::nilpotent;
    RiccatiClass classification = RiccatiClass::unresolved;

    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> slopes;

    double horizon = 0.0;               ///< requested end time
    double blow_up_time = kInfinity;    ///< t* when classification == blow_up
    double sign_exit_time = kInfinity;  ///< first t with y(t) > 0
    double discriminant = 0.0;          ///< evaluated at the horizon
    std::optional<std::pair<double, double>> roots;
    double root = 0.0;                  ///< the limit when converges_to_root

    bool closed_form_used = false;
    double closed_form_discrepancy = 0.0;  ///< max |closed form - integrator| on the stored grid

    /// Last time at which the trajectory is defined.
    double valid_until() const { return times.empty() ? 0.0 : times.back(); }

    /// Cubic Hermite interpolant of y. Throws window-exceeded beyond valid_until().
    double value(double t) const;
    /// y'(t) from the equation at the interpolated state, so certificates built
    /// from it cancel the targeted entry to rounding.
    double derivative(double t) const;

    const RiccatiRhs& rhs() const { return rhs_; }

private:
    friend RiccatiSolution solve_riccati(RiccatiKind, TimeMatrix, double, double, const RiccatiOptions&);
    RiccatiRhs rhs_;
};

/// Adaptive Dormand-Prince 5(4) integration on [0, horizon] with blow-up and
/// sign-window detection. Uses the closed form when the quadratic coefficient
/// vanishes and records its discrepancy against the integrator.
RiccatiSolution solve_riccati(RiccatiKind kind, TimeMatrix g, double y0, double horizon,
                              const RiccatiOptions& options = {});

inline RiccatiSolution riccati_solve(TimeMatrix g, double b0, double horizon, const RiccatiOptions& options = {}) {
    return solve_riccati(RiccatiKind::nilpotent, std::move(g), b0, horizon, options);
}

inline RiccatiSolution riccati_idempotent_solve(TimeMatrix g, double c0, double horizon,
                                                const RiccatiOptions& options = {}) {
    return solve_riccati(RiccatiKind::idempotent, std::move(g), c0, horizon, options);
}

/// Closed-form solution of y' = beta(t) y + gamma(t), y(0) = y0, sampled at `times`.
std::vector<double> linear_closed_form(const std::function<double(double)>& beta,
                                       const std::function<double(double)>& gamma, double y0,
                                       const std::vector<double>& times);

}  // namespace poslab
