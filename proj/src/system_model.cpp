#include "poslab/system_model.hpp"

#include "poslab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

namespace poslab {

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(int dim, std::array<double, 2> lo, std::array<double, 2> hi) : dim_(dim), lo_(lo), hi_(hi) {
    for (int k = 0; k < dim_; ++k) {
        if (!(hi_[k] > lo_[k]) || !std::isfinite(lo_[k]) || !std::isfinite(hi_[k]))
            throw LabError(ErrorKind::invalid_argument, "domain extent must have positive finite length");
    }
}

Domain Domain::interval(double lo, double hi) { return Domain(1, {lo, 0.0}, {hi, 0.0}); }

Domain Domain::rectangle(double x_lo, double x_hi, double y_lo, double y_hi) {
    return Domain(2, {x_lo, y_lo}, {x_hi, y_hi});
}

Domain Domain::unit_pi_square() { return rectangle(0.0, std::numbers::pi, 0.0, std::numbers::pi); }

double Domain::measure() const {
    double m = 1.0;
    for (int k = 0; k < dim_; ++k) m *= extent(k);
    return m;
}

// ---------------------------------------------------------------------------
// CoefficientField

CoefficientField CoefficientField::constant(Matrix value, std::string tag) {
    CoefficientField f;
    f.dependence_ = Dependence::constant;
    f.rows_ = static_cast<int>(value.rows());
    f.cols_ = static_cast<int>(value.cols());
    f.constant_ = std::move(value);
    f.tag_ = std::move(tag);
    return f;
}

CoefficientField CoefficientField::of_time(TimeFn fn, int rows, int cols, std::string tag) {
    CoefficientField f;
    f.dependence_ = Dependence::time;
    f.rows_ = rows;
    f.cols_ = cols;
    f.time_fn_ = std::move(fn);
    f.tag_ = std::move(tag);
    return f;
}

CoefficientField CoefficientField::of_space_time(SpaceTimeFn fn, int rows, int cols, std::string tag) {
    CoefficientField f;
    f.dependence_ = Dependence::space_time;
    f.rows_ = rows;
    f.cols_ = cols;
    f.space_time_fn_ = std::move(fn);
    f.tag_ = std::move(tag);
    return f;
}

CoefficientField CoefficientField::of_state(StateFn fn, int rows, int cols, std::string tag) {
    CoefficientField f;
    f.dependence_ = Dependence::state;
    f.rows_ = rows;
    f.cols_ = cols;
    f.state_fn_ = std::move(fn);
    f.tag_ = std::move(tag);
    return f;
}

bool CoefficientField::is_zero() const {
    return empty() || (dependence_ == Dependence::constant && constant_.isZero(0.0));
}

namespace {

Matrix checked(Matrix value, int rows, int cols) {
    if (value.rows() != rows || value.cols() != cols)
        throw LabError(ErrorKind::coefficient_evaluation, "coefficient evaluator returned wrong shape");
    if (!value.allFinite()) throw LabError(ErrorKind::coefficient_evaluation, "non-finite coefficient value");
    return value;
}

}  // namespace

Matrix CoefficientField::operator()(const Point& x, double t) const {
    switch (dependence_) {
        case Dependence::constant: return constant_;
        case Dependence::time: return checked(time_fn_(t), rows_, cols_);
        case Dependence::space_time: return checked(space_time_fn_(x, t), rows_, cols_);
        case Dependence::state: break;
    }
    throw LabError(ErrorKind::coefficient_evaluation, "state-dependent coefficient evaluated at (x, t)");
}

Matrix CoefficientField::at_state(const Vector& u) const {
    switch (dependence_) {
        case Dependence::constant: return constant_;
        case Dependence::state: return checked(state_fn_(u), rows_, cols_);
        default: break;
    }
    throw LabError(ErrorKind::coefficient_evaluation, "(x, t) coefficient evaluated at a state");
}

CoefficientField CoefficientField::transposed() const {
    CoefficientField f = *this;
    std::swap(f.rows_, f.cols_);
    f.tag_ = tag_.empty() ? std::string{} : tag_ + "^T";
    switch (dependence_) {
        case Dependence::constant: f.constant_ = constant_.transpose(); break;
        case Dependence::time: f.time_fn_ = [fn = time_fn_](double t) -> Matrix { return fn(t).transpose(); }; break;
        case Dependence::space_time:
            f.space_time_fn_ = [fn = space_time_fn_](const Point& x, double t) -> Matrix {
                return fn(x, t).transpose();
            };
            break;
        case Dependence::state:
            f.state_fn_ = [fn = state_fn_](const Vector& u) -> Matrix { return fn(u).transpose(); };
            break;
    }
    return f;
}

CoefficientField CoefficientField::time_reversed(double horizon) const {
    CoefficientField f = *this;
    if (dependence_ == Dependence::time)
        f.time_fn_ = [fn = time_fn_, horizon](double t) { return fn(horizon - t); };
    else if (dependence_ == Dependence::space_time)
        f.space_time_fn_ = [fn = space_time_fn_, horizon](const Point& x, double t) { return fn(x, horizon - t); };
    return f;
}

// ---------------------------------------------------------------------------
// StateMap

Matrix StateMap::jacobian_at(const Vector& u) const {
    if (jacobian) return jacobian(u);
    const Eigen::Index m = u.size();
    Matrix jac(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double step = 1e-6 * (1.0 + std::abs(u(j)));
        Vector up = u, dn = u;
        up(j) += step;
        dn(j) -= step;
        jac.col(j) = (value(up) - value(dn)) / (2.0 * step);
    }
    return jac;
}

void check_shapes(const SystemSpec& spec) {
    const int m = spec.m;
    if (m < 1) throw LabError(ErrorKind::invalid_argument, "component count must be positive");
    auto check = [m](const CoefficientField& f, const char* name) {
        if (f.empty()) return;
        if (f.rows() != m || f.cols() != m)
            throw LabError(ErrorKind::invalid_argument, std::string("coefficient ") + name + " has wrong shape");
    };
    if (spec.a.empty() && !spec.potential)
        throw LabError(ErrorKind::invalid_argument, "diffusion matrix a is required");
    check(spec.a, "a");
    check(spec.g, "g");
    if (!spec.b.empty() && static_cast<int>(spec.b.size()) != spec.domain.dimension())
        throw LabError(ErrorKind::invalid_argument, "b needs one matrix per spatial axis");
    for (const auto& bk : spec.b) check(bk, "b");
    if (spec.boundary.kind == BoundaryKind::dirichlet && !spec.boundary.data)
        throw LabError(ErrorKind::invalid_argument, "non-homogeneous Dirichlet condition needs boundary data");
    if (!spec.initial) throw LabError(ErrorKind::invalid_argument, "initial data missing");
    if (!(spec.horizon > 0.0)) throw LabError(ErrorKind::invalid_argument, "horizon must be positive");
    if (spec.potential && spec.form != SystemForm::quasilinear)
        throw LabError(ErrorKind::invalid_argument, "a potential P is only meaningful for quasilinear systems");
}

// ---------------------------------------------------------------------------
// Exponents

double SigmaValue::representative(double fallback) const {
    if (!is_interval) return value;
    if (std::isinf(hi)) return fallback;
    return 0.5 * (lo + hi);
}

bool SigmaValue::contains(double s) const {
    if (!is_interval) return s == value;
    return s > lo && s < hi;
}

SigmaValue sigma_exponent(int dimension, SigmaVariant variant) {
    if (dimension < 1) throw LabError(ErrorKind::invalid_argument, "dimension must be >= 1");
    const double n = dimension;
    SigmaValue out;
    if (variant == SigmaVariant::standard) {
        out.value = 4.0 / n + 2.0;
        return out;
    }
    if (dimension <= 2) {
        out.is_interval = true;
        out.lo = 1.0;
        out.hi = kInfinity;
    } else if (dimension == 3) {
        out.is_interval = true;
        out.lo = 1.0;
        out.hi = 6.0 + 10.0 / 3.0;
    } else {
        out.value = 2.0 * (4.0 + 2.0 * n) / (n - 2.0) + 4.0 / n + 2.0;
    }
    return out;
}

double conjugate_exponent(double s) {
    if (!(s > 1.0)) throw LabError(ErrorKind::exponent_undefined, "conjugate needs s > 1");
    if (std::isinf(s)) return 1.0;
    return s / (s - 1.0);
}

namespace {

constexpr double kExponentEps = 1e-12;

// r * s / (s - r) with the boundary case s == r giving infinity.
double holder_partner(double s, double r) {
    if (std::abs(s - r) <= kExponentEps * std::max(1.0, r)) return kInfinity;
    return r * s / (s - r);
}

}  // namespace

ExponentReport dual_exponents(double p_star, double q_star, double sigma) {
    if (!(sigma > 1.0)) throw LabError(ErrorKind::exponent_undefined, "sigma must exceed 1");
    const double sc = conjugate_exponent(sigma);
    const double tol = kExponentEps * std::max(1.0, sc);
    if (p_star < 2.0 - kExponentEps) throw LabError(ErrorKind::exponent_undefined, "p* >= 2 violated");
    if (p_star < sc - tol) throw LabError(ErrorKind::exponent_undefined, "p* >= sigma' violated");
    if (q_star < sc - tol) throw LabError(ErrorKind::exponent_undefined, "q* >= sigma' violated");

    ExponentReport r;
    r.sigma = sigma;
    r.sigma_conjugate = sc;
    r.q1 = holder_partner(p_star, 2.0);
    r.q2 = holder_partner(p_star, sc);
    r.q3 = holder_partner(q_star, sc);
    return r;
}

void gauss_legendre_unit(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw LabError(ErrorKind::invalid_argument, "quadrature order must be >= 1");
    nodes.assign(order, 0.0);
    weights.assign(order, 0.0);
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = weights[n - 1 - i] = 0.5 * w;
    }
}

Matrix mean_coefficient(const StateMap& potential, const Vector& u, int order) {
    std::vector<double> nodes, weights;
    gauss_legendre_unit(order, nodes, weights);
    Matrix acc = Matrix::Zero(u.size(), u.size());
    for (int i = 0; i < order; ++i) {
        const Matrix jac = potential.jacobian_at(nodes[i] * u);
        if (!jac.allFinite())
            throw LabError(ErrorKind::coefficient_evaluation, "non-finite Jacobian sample in mean coefficient");
        acc += weights[i] * jac;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Point> sample_points(const Domain& domain, int per_axis) {
    if (per_axis < 2) throw LabError(ErrorKind::invalid_argument, "need at least two samples per axis");
    std::vector<Point> pts;
    const int ny = domain.dimension() == 2 ? per_axis : 1;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < per_axis; ++i) {
            Point p{domain.lo(0) + domain.extent(0) * i / (per_axis - 1), 0.0};
            if (domain.dimension() == 2) p[1] = domain.lo(1) + domain.extent(1) * j / (per_axis - 1);
            pts.push_back(p);
        }
    }
    return pts;
}

EllipticityReport validate_system(const SystemSpec& spec, std::span<const Point> samples, int time_slices) {
    check_shapes(spec);
    if (samples.empty()) throw LabError(ErrorKind::invalid_argument, "no ellipticity samples");

    EllipticityReport rep;
    rep.lambda_spectral = kInfinity;
    rep.lambda_symmetric = kInfinity;

    auto inspect = [&](const Matrix& a, const Point& x, double t) {
        const Eigen::EigenSolver<Matrix> es(a, false);
        const double re = es.eigenvalues().real().minCoeff();
        const Matrix sym = 0.5 * (a + a.transpose());
        const double sy = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (re < rep.lambda_spectral) {
            rep.lambda_spectral = re;
            rep.worst_point = x;
            rep.worst_time = t;
        }
        rep.lambda_symmetric = std::min(rep.lambda_symmetric, sy);
    };

    auto diffusion_at_state = [&](const Vector& u) -> Matrix {
        if (spec.potential) return spec.potential->jacobian_at(u);
        return spec.a.at_state(u);
    };

    const bool state_based = spec.form == SystemForm::quasilinear;
    const auto dep = spec.a.empty() ? CoefficientField::Dependence::state : spec.a.dependence();
    const int slices = (state_based || dep == CoefficientField::Dependence::constant) ? 1 : std::max(1, time_slices);
    for (int s = 0; s < slices; ++s) {
        const double t = slices == 1 ? 0.0 : spec.horizon * s / (slices - 1);
        for (const Point& x : samples) {
            if (state_based) {
                inspect(diffusion_at_state(spec.initial(x)), x, 0.0);
            } else {
                inspect(spec.a(x, t), x, t);
            }
            if (!state_based && dep == CoefficientField::Dependence::constant) break;
        }
    }

    if (!(rep.lambda_spectral > 0.0)) {
        std::ostringstream os;
        os << "min Re(eig a) = " << rep.lambda_spectral << " at x = (" << rep.worst_point[0] << ", "
           << rep.worst_point[1] << "), t = " << rep.worst_time;
        throw LabError(ErrorKind::not_elliptic, os.str());
    }
    return rep;
}

}  // namespace poslab
