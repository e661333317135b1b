#pragma once

#include "poslab/linalg.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace poslab {

/// Axis-aligned box in one or two dimensions.
class Domain {
public:
    static Domain interval(double lo, double hi);
    static Domain rectangle(double x_lo, double x_hi, double y_lo, double y_hi);
    /// (0,pi) x (0,pi), the box used by the sign-change counterexamples.
    static Domain unit_pi_square();

    int dimension() const { return dim_; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double extent(int axis) const { return hi_[axis] - lo_[axis]; }
    double measure() const;

private:
    Domain(int dim, std::array<double, 2> lo, std::array<double, 2> hi);

    int dim_ = 1;
    std::array<double, 2> lo_{};
    std::array<double, 2> hi_{};
};

/// Matrix-valued coefficient. Linear systems evaluate it at (x, t);
/// quasilinear systems evaluate it at the state u. The dependence tag lets
/// solvers skip redundant evaluation.
class CoefficientField {
public:
    enum class Dependence { constant, time, space_time, state };

    using TimeFn = std::function<Matrix(double)>;
    using SpaceTimeFn = std::function<Matrix(const Point&, double)>;
    using StateFn = std::function<Matrix(const Vector&)>;

    CoefficientField() = default;

    static CoefficientField constant(Matrix value, std::string tag = {});
    static CoefficientField of_time(TimeFn fn, int rows, int cols, std::string tag = {});
    static CoefficientField of_space_time(SpaceTimeFn fn, int rows, int cols, std::string tag = {});
    static CoefficientField of_state(StateFn fn, int rows, int cols, std::string tag = {});
    static CoefficientField zero(int m) { return constant(Matrix::Zero(m, m), "0"); }

    bool empty() const { return rows_ == 0; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Dependence dependence() const { return dependence_; }
    const std::string& tag() const { return tag_; }
    bool is_zero() const;

    /// Value at (x, t). Throws coefficient-evaluation for state fields.
    Matrix operator()(const Point& x, double t) const;
    /// Value at state u. Constant fields ignore u; time/space fields throw.
    Matrix at_state(const Vector& u) const;

    CoefficientField transposed() const;
    /// Time-reversed view t -> T - t (identity for constant and state fields).
    CoefficientField time_reversed(double horizon) const;

private:
    Dependence dependence_ = Dependence::constant;
    int rows_ = 0;
    int cols_ = 0;
    std::string tag_;
    Matrix constant_;
    TimeFn time_fn_;
    SpaceTimeFn space_time_fn_;
    StateFn state_fn_;
};

using VectorField = std::function<Vector(const Point&, double)>;
using InitialData = std::function<Vector(const Point&)>;

/// P : R^m -> R^m with optional Jacobian (finite differences otherwise).
struct StateMap {
    std::function<Vector(const Vector&)> value;
    std::function<Matrix(const Vector&)> jacobian;

    Matrix jacobian_at(const Vector& u) const;
};

enum class SystemForm {
    divergence,      ///< W_t = Div(a DW) - Div(b W) + g W + f
    non_divergence,  ///< W_t = a Lap W - Div(b W) + g W + f
    quasilinear,     ///< u_t = Div(a(u) Du) + b(u) Du + g(u) u, or Lap P(u) + ... when a potential is set
};

enum class BoundaryKind { dirichlet_homogeneous, dirichlet, neumann_homogeneous };

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::dirichlet_homogeneous;
    VectorField data;  ///< lateral data for non-homogeneous Dirichlet

    static BoundaryCondition homogeneous_dirichlet() { return {}; }
    static BoundaryCondition dirichlet(VectorField data) { return {BoundaryKind::dirichlet, std::move(data)}; }
    static BoundaryCondition neumann() { return {BoundaryKind::neumann_homogeneous, {}}; }
};

struct SystemSpec {
    int m = 0;
    Domain domain = Domain::interval(0.0, 1.0);
    SystemForm form = SystemForm::divergence;
    CoefficientField a;
    std::vector<CoefficientField> b;  ///< one m x m field per axis; empty means b = 0
    CoefficientField g;
    std::optional<StateMap> potential;  ///< quasilinear P-form
    VectorField forcing;                ///< optional f(x, t)
    BoundaryCondition boundary;
    InitialData initial;
    double horizon = 1.0;
    std::string name;
};

/// Shape/field sanity checks (m, b axis count, boundary data, initial data).
void check_shapes(const SystemSpec& spec);

// ---------------------------------------------------------------------------
// Exponent bookkeeping

/// Either an exact value or an open interval (lo, hi); hi may be +inf.
struct SigmaValue {
    bool is_interval = false;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    /// Number to use when a caller needs one: the value, or the interval
    /// midpoint. Unbounded intervals fall back to `fallback`.
    double representative(double fallback) const;
    bool contains(double s) const;
};

enum class SigmaVariant { standard, improved };

SigmaValue sigma_exponent(int dimension, SigmaVariant variant);

/// Conjugate exponent s' with 1/s + 1/s' = 1.
double conjugate_exponent(double s);

struct ExponentReport {
    double sigma = 0.0;
    double sigma_conjugate = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;
};

/// Continuity exponents for the coefficient maps a, b, g given the weak
/// solution's integrability (p*, q*) and the dual bound exponent sigma.
ExponentReport dual_exponents(double p_star, double q_star, double sigma);

/// abar(u) = int_0^1 P_u(s u) ds by Gauss-Legendre with `order` nodes.
Matrix mean_coefficient(const StateMap& potential, const Vector& u, int order = 4);

/// Gauss-Legendre nodes/weights on [0, 1].
void gauss_legendre_unit(int order, std::vector<double>& nodes, std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Validation

struct EllipticityReport {
    double lambda_spectral = 0.0;   ///< min Re(eig a) over samples
    double lambda_symmetric = 0.0;  ///< min eig of (a + a^T)/2 over samples
    Point worst_point{};
    double worst_time = 0.0;
};

/// Uniform sample points: `per_axis` nodes on each axis (boundary included).
std::vector<Point> sample_points(const Domain& domain, int per_axis);

/// Ellipticity of a sampled over points x time slices (state fields are
/// sampled at the initial data). Throws not-elliptic when Re(eig) <= 0.
EllipticityReport validate_system(const SystemSpec& spec, std::span<const Point> samples, int time_slices = 16);

}  // namespace poslab
