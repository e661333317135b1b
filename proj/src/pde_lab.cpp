#include "poslab/pde_lab.hpp"

#include "discrete_operator.hpp"
#include "poslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace poslab {

using detail::DiffusionForm;
using detail::OperatorDef;

namespace {

OperatorDef from_spec(const SystemSpec& spec) {
    check_shapes(spec);
    OperatorDef op;
    op.m = spec.m;
    op.G = spec.g;
    op.forcing = spec.forcing;
    op.boundary = spec.boundary;
    op.initial = spec.initial;
    op.horizon = spec.horizon;
    switch (spec.form) {
        case SystemForm::divergence:
            op.form = DiffusionForm::flux;
            op.A = spec.a;
            op.B1 = spec.b;
            break;
        case SystemForm::non_divergence:
            op.form = DiffusionForm::non_divergence;
            op.A = spec.a;
            op.B1 = spec.b;
            break;
        case SystemForm::quasilinear:
            op.form = spec.potential ? DiffusionForm::potential : DiffusionForm::flux;
            op.A = spec.a;
            op.potential = spec.potential;
            op.B2 = spec.b;
            break;
    }
    return op;
}

OperatorDef from_system(const OperatorSystem& sys) {
    if (sys.m < 1 || !sys.initial || !(sys.horizon > 0.0))
        throw LabError(ErrorKind::invalid_argument, "operator system is incomplete");
    OperatorDef op;
    op.m = sys.m;
    op.form = sys.non_divergence ? DiffusionForm::non_divergence : DiffusionForm::flux;
    op.A = sys.A;
    op.B1 = sys.B1;
    op.B2 = sys.B2;
    op.G = sys.G;
    op.forcing = sys.forcing;
    op.boundary = sys.boundary;
    op.initial = sys.initial;
    op.horizon = sys.horizon;
    return op;
}

void check_grid(const Domain& domain, const Grid& grid) {
    if (domain.dimension() != grid.dimension())
        throw LabError(ErrorKind::grid_mismatch, "grid dimension differs from the domain");
    for (int k = 0; k < domain.dimension(); ++k)
        if (domain.lo(k) != grid.domain().lo(k) || domain.hi(k) != grid.domain().hi(k))
            throw LabError(ErrorKind::grid_mismatch, "grid extent differs from the domain");
}

FieldTrajectory run(const OperatorDef& op, const Grid& grid, const SolveOptions& opt) {
    const double limit = detail::diffusion_limit(op, grid, std::max(1, opt.time_slices));
    double dt = opt.dt;
    if (dt > 0.0) {
        if (dt > limit * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "dt = " << dt << " exceeds the stability limit " << limit;
            throw LabError(ErrorKind::timestep_too_large, os.str());
        }
    } else {
        dt = std::isfinite(limit) ? opt.safety * limit : op.horizon / 100.0;
    }
    return detail::integrate(op, grid, detail::plan_steps(op.horizon, dt, opt.max_stamps));
}

}  // namespace

double stable_timestep(const SystemSpec& spec, const Grid& grid, int time_slices) {
    return detail::diffusion_limit(from_spec(spec), grid, time_slices);
}

double stable_timestep(const OperatorSystem& sys, const Grid& grid, int time_slices) {
    return detail::diffusion_limit(from_system(sys), grid, time_slices);
}

FieldTrajectory solve_linear(const SystemSpec& spec, const Grid& grid, const SolveOptions& options) {
    if (spec.form == SystemForm::quasilinear)
        throw LabError(ErrorKind::invalid_argument, "solve_linear needs a divergence or non-divergence system");
    check_grid(spec.domain, grid);
    return run(from_spec(spec), grid, options);
}

FieldTrajectory solve_quasilinear(const SystemSpec& spec, const Grid& grid, const SolveOptions& options) {
    if (spec.form != SystemForm::quasilinear)
        throw LabError(ErrorKind::invalid_argument, "solve_quasilinear needs a quasilinear system");
    check_grid(spec.domain, grid);
    return run(from_spec(spec), grid, options);
}

FieldTrajectory simulate(const SystemSpec& spec, const Grid& grid, const SolveOptions& options) {
    return spec.form == SystemForm::quasilinear ? solve_quasilinear(spec, grid, options)
                                                : solve_linear(spec, grid, options);
}

FieldTrajectory solve_operator(const OperatorSystem& sys, const Grid& grid, const SolveOptions& options) {
    check_grid(sys.domain, grid);
    return run(from_system(sys), grid, options);
}

// ---------------------------------------------------------------------------
// Transformed system

namespace {

using Dep = CoefficientField::Dependence;

Dep combine(Dep a, Dep b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

Matrix value_or_zero(const CoefficientField& f, const Point& x, double t, int m) {
    return f.empty() ? Matrix::Zero(m, m) : f(x, t);
}

// d_k a by central differences, zero for x-independent fields.
Matrix space_derivative(const CoefficientField& a, const Domain& domain, const Point& x, double t, int k) {
    if (a.dependence() != Dep::space_time) return Matrix::Zero(a.rows(), a.cols());
    constexpr double step = 1e-5;
    Point xp = x, xm = x;
    double denom = 2.0 * step;
    xp[k] += step;
    xm[k] -= step;
    // One-sided at the walls so the samples stay inside the closed domain.
    if (xm[k] < domain.lo(k)) {
        xm[k] = x[k];
        denom = step;
    }
    if (xp[k] > domain.hi(k)) {
        xp[k] = x[k];
        denom = step;
    }
    return (a(xp, t) - a(xm, t)) / denom;
}

CoefficientField make_field(Dep dep, int m, const std::string& tag,
                            std::function<Matrix(const Point&, double)> fn) {
    switch (dep) {
        case Dep::constant: return CoefficientField::constant(fn(Point{0.0, 0.0}, 0.0), tag);
        case Dep::time:
            return CoefficientField::of_time([fn](double t) { return fn(Point{0.0, 0.0}, t); }, m, m, tag);
        default: return CoefficientField::of_space_time(std::move(fn), m, m, tag);
    }
}

}  // namespace

TransformedSystem transform_system(const SystemSpec& spec, const TransformCertificate& cert) {
    check_shapes(spec);
    if (spec.form == SystemForm::quasilinear)
        throw LabError(ErrorKind::invalid_argument, "transform_system needs a linear system");
    if (cert.size() != spec.m) throw LabError(ErrorKind::invalid_argument, "certificate size differs from m");
    if (cert.t_valid() < spec.horizon * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "certificate valid on [0, " << cert.t_valid() << "), horizon is " << spec.horizon;
        throw LabError(ErrorKind::window_exceeded, os.str());
    }
    if (cert.x_dependent() && spec.boundary.kind == BoundaryKind::neumann_homogeneous)
        throw LabError(ErrorKind::invalid_argument, "Neumann data does not transform under an x-dependent J");

    const int m = spec.m;
    const int dim = spec.domain.dimension();
    const bool xdep = cert.x_dependent();
    const bool nondiv = spec.form == SystemForm::non_divergence;
    auto src = std::make_shared<const SystemSpec>(spec);

    Dep dep = cert.x_dependent() ? Dep::space_time : (cert.time_dependent() ? Dep::time : Dep::constant);
    dep = combine(dep, spec.a.dependence());
    if (!spec.g.empty()) dep = combine(dep, spec.g.dependence());
    for (const auto& bk : spec.b) dep = combine(dep, bk.dependence());

    TransformedSystem ts;
    ts.source = src;
    ts.certificate = cert;
    OperatorSystem& sys = ts.system;
    sys.m = m;
    sys.domain = spec.domain;
    sys.horizon = spec.horizon;
    sys.boundary = spec.boundary;

    sys.A = make_field(dep, m, "JaJ^-1", [src, cert](const Point& x, double t) {
        const CertificateValue v = cert.evaluate(x, t);
        return Matrix(v.J * src->a(x, t) * v.J_inv);
    });

    const bool has_b = !spec.b.empty();
    for (int k = 0; k < dim; ++k) {
        if (has_b || xdep) {
            sys.B1.push_back(make_field(dep, m, "B1", [src, cert, k, xdep, m](const Point& x, double t) {
                const CertificateValue v = cert.evaluate(x, t);
                Matrix out = Matrix::Zero(m, m);
                if (!src->b.empty()) out += v.J * src->b[k](x, t) * v.J_inv;
                if (xdep) out += v.J * src->a(x, t) * v.J_inv * v.DJ_Jinv[k];
                return out;
            }));
        }
        if (xdep || nondiv) {
            sys.B2.push_back(make_field(dep, m, "B2", [src, cert, k, xdep, nondiv, m](const Point& x, double t) {
                const CertificateValue v = cert.evaluate(x, t);
                Matrix out = Matrix::Zero(m, m);
                if (xdep) out -= v.DJ_Jinv[k] * v.J * src->a(x, t) * v.J_inv;
                if (nondiv) out -= v.J * space_derivative(src->a, src->domain, x, t, k) * v.J_inv;
                return out;
            }));
        }
    }

    sys.G = make_field(dep, m, "G", [src, cert, dim, xdep, nondiv, m](const Point& x, double t) {
        const CertificateValue v = cert.evaluate(x, t);
        Matrix out = v.J * value_or_zero(src->g, x, t, m) * v.J_inv + v.Jt_Jinv;
        if (xdep) {
            const Matrix A = v.J * src->a(x, t) * v.J_inv;
            for (int k = 0; k < dim; ++k) {
                const Matrix& E = v.DJ_Jinv[k];
                if (!src->b.empty()) out += E * v.J * src->b[k](x, t) * v.J_inv;
                out += E * A * E;
                if (nondiv) out += v.J * space_derivative(src->a, src->domain, x, t, k) * v.J_inv * E;
            }
        }
        return out;
    });

    if (spec.forcing) {
        sys.forcing = [src, cert](const Point& x, double t) -> Vector {
            return cert.evaluate(x, t).J * src->forcing(x, t);
        };
    }
    if (spec.boundary.kind == BoundaryKind::dirichlet) {
        sys.boundary.data = [src, cert](const Point& x, double t) -> Vector {
            return cert.evaluate(x, t).J * src->boundary.data(x, t);
        };
    }
    sys.initial = [src, cert](const Point& x) -> Vector { return cert.evaluate(x, 0.0).J * src->initial(x); };
    return ts;
}

FieldTrajectory solve_transformed(const TransformedSystem& ts, const Grid& grid, const SolveOptions& options) {
    return solve_operator(ts.system, grid, options);
}

FieldTrajectory apply_certificate(const FieldTrajectory& W, const TransformCertificate& cert) {
    const Grid& grid = W.grid();
    const int m = W.components();
    if (cert.size() != m) throw LabError(ErrorKind::invalid_argument, "certificate size differs from m");
    FieldTrajectory out(grid, m);
    const auto points = grid.points();
    std::vector<double> buf(grid.size() * m);
    for (std::size_t s = 0; s < W.stamps(); ++s) {
        const double t = W.time(s);
        Matrix J;
        if (!cert.x_dependent()) J = cert.J(Point{0.0, 0.0}, t);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            if (cert.x_dependent()) J = cert.J(points[p], t);
            const Vector jw = J * W.node_vector(s, p);
            for (int c = 0; c < m; ++c) buf[p * m + c] = jw(c);
        }
        out.append(t, buf);
    }
    return out;
}

double transform_gap(const FieldTrajectory& W, const FieldTrajectory& v, const TransformCertificate& cert) {
    if (!W.grid().same_as(v.grid()) || W.components() != v.components())
        throw LabError(ErrorKind::grid_mismatch, "trajectories live on different grids");
    if (W.stamps() != v.stamps()) throw LabError(ErrorKind::grid_mismatch, "trajectories have different stamps");
    for (std::size_t s = 0; s < W.stamps(); ++s)
        if (std::abs(W.time(s) - v.time(s)) > 1e-12 * std::max(1.0, W.time(s)))
            throw LabError(ErrorKind::grid_mismatch, "trajectories have different stamps");
    const FieldTrajectory jw = apply_certificate(W, cert);
    double worst = 0.0;
    for (std::size_t k = 0; k < jw.raw().size(); ++k) worst = std::max(worst, std::abs(jw.raw()[k] - v.raw()[k]));
    return worst;
}

}  // namespace poslab
