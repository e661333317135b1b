#include "discrete_operator.hpp"

#include "poslab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace poslab::detail {

namespace {

void copy_row_major(const Matrix& M, int m, double* out) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out[i * m + j] = M(i, j);
}

// y += s * M x for row-major m x m M
inline void axpy_mat(double s, const double* M, const double* x, double* y, int m) {
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += M[i * m + j] * x[j];
        y[i] += s * acc;
    }
}

Vector node_state(const std::vector<double>& state, std::size_t node, int m) {
    Vector u(m);
    for (int c = 0; c < m; ++c) u(c) = state[node * m + c];
    return u;
}

}  // namespace

SlotSource::SlotSource(CoefficientField field, const Grid& grid, int m)
    : field_(std::move(field)), grid_(&grid), points_(grid.points()), m_(m) {
    if (!field_.empty() && (field_.rows() != m || field_.cols() != m))
        throw LabError(ErrorKind::invalid_argument, "coefficient shape does not match the component count");
}

void SlotSource::fill(double t, const std::vector<double>& state, Slot& out) {
    out.active = active();
    if (!out.active) return;
    const int mm = m_ * m_;
    out.mm = mm;
    using D = CoefficientField::Dependence;
    switch (field_.dependence()) {
        case D::constant:
            if (filled_) return;
            out.uniform = true;
            out.data.resize(mm);
            copy_row_major(field_(Point{0.0, 0.0}, 0.0), m_, out.data.data());
            filled_ = true;
            return;
        case D::time:
            out.uniform = true;
            out.data.resize(mm);
            copy_row_major(field_(Point{0.0, 0.0}, t), m_, out.data.data());
            return;
        case D::space_time:
            out.uniform = false;
            out.data.resize(mm * points_.size());
            for (std::size_t p = 0; p < points_.size(); ++p)
                copy_row_major(field_(points_[p], t), m_, out.data.data() + p * mm);
            return;
        case D::state:
            out.uniform = false;
            out.data.resize(mm * points_.size());
            for (std::size_t p = 0; p < points_.size(); ++p)
                copy_row_major(field_.at_state(node_state(state, p, m_)), m_, out.data.data() + p * mm);
            return;
    }
}

StepPlan plan_steps(double horizon, double dt, int max_stamps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw LabError(ErrorKind::invalid_argument, "horizon must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw LabError(ErrorKind::invalid_argument, "dt must be positive");
    StepPlan plan;
    plan.steps = std::max(1L, static_cast<long>(std::ceil(horizon / dt * (1.0 - 1e-12))));
    plan.dt = horizon / static_cast<double>(plan.steps);
    const long slots = std::max(1, max_stamps - 1);
    plan.stride = std::max(1L, (plan.steps + slots - 1) / slots);
    return plan;
}

double diffusion_limit(const OperatorDef& op, const Grid& grid, int time_slices) {
    const int dim = grid.dimension();
    double hmin = grid.spacing(0);
    double inv_sum = 4.0 / (grid.spacing(0) * grid.spacing(0));
    if (dim == 2) {
        hmin = std::min(hmin, grid.spacing(1));
        inv_sum += 4.0 / (grid.spacing(1) * grid.spacing(1));
    }
    double limit = kInfinity;
    auto consider = [&](const Matrix& a, const Point& x, double t) {
        const double row = max_row_sum(a);
        if (row > 0.0) limit = std::min(limit, hmin * hmin / (2.0 * dim * row));
        const Eigen::EigenSolver<Matrix> es(a, false);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const std::complex<double> mu = es.eigenvalues()(i);
            if (!(mu.real() > 0.0)) {
                std::ostringstream os;
                os << "diffusion eigenvalue " << mu.real() << (mu.imag() >= 0 ? "+" : "") << mu.imag()
                   << "i at x = (" << x[0] << ", " << x[1] << "), t = " << t;
                throw LabError(ErrorKind::not_elliptic, os.str());
            }
            limit = std::min(limit, 2.0 * mu.real() / std::norm(mu) / inv_sum);
        }
    };

    const auto points = grid.points();
    if (op.form == DiffusionForm::potential) {
        for (const Point& x : points) consider(op.potential->jacobian_at(op.initial(x)), x, 0.0);
        return limit;
    }
    using D = CoefficientField::Dependence;
    switch (op.A.dependence()) {
        case D::constant: consider(op.A(Point{0.0, 0.0}, 0.0), Point{0.0, 0.0}, 0.0); break;
        case D::time:
            for (int s = 0; s < time_slices; ++s) {
                const double t = time_slices == 1 ? 0.0 : op.horizon * s / (time_slices - 1);
                consider(op.A(Point{0.0, 0.0}, t), Point{0.0, 0.0}, t);
            }
            break;
        case D::space_time:
            for (int s = 0; s < time_slices; ++s) {
                const double t = time_slices == 1 ? 0.0 : op.horizon * s / (time_slices - 1);
                for (const Point& x : points) consider(op.A(x, t), x, t);
            }
            break;
        case D::state:
            for (const Point& x : points) consider(op.A.at_state(op.initial(x)), x, 0.0);
            break;
    }
    return limit;
}

FieldTrajectory integrate(const OperatorDef& op, const Grid& grid, const StepPlan& plan) {
    const int m = op.m;
    const int dim = grid.dimension();
    const std::size_t n = grid.size();
    const auto points = grid.points();
    const bool neumann = op.boundary.kind == BoundaryKind::neumann_homogeneous;

    std::vector<double> cur(n * m), next(n * m);
    for (std::size_t p = 0; p < n; ++p) {
        const Vector v = op.initial(points[p]);
        if (v.size() != m) throw LabError(ErrorKind::invalid_argument, "initial data has the wrong size");
        for (int c = 0; c < m; ++c) cur[p * m + c] = v(c);
    }

    FieldTrajectory traj(grid, m);
    traj.append(0.0, cur);

    SlotSource srcA(op.form == DiffusionForm::potential ? CoefficientField{} : op.A, grid, m);
    SlotSource srcG(op.G, grid, m);
    std::vector<SlotSource> srcB1, srcB2;
    for (int k = 0; k < dim; ++k) {
        srcB1.emplace_back(k < static_cast<int>(op.B1.size()) ? op.B1[k] : CoefficientField{}, grid, m);
        srcB2.emplace_back(k < static_cast<int>(op.B2.size()) ? op.B2[k] : CoefficientField{}, grid, m);
    }
    Slot A, G;
    std::vector<Slot> B1(dim), B2(dim);

    std::vector<std::size_t> update;
    std::vector<std::size_t> fixed;
    for (std::size_t p = 0; p < n; ++p) {
        if (neumann || !grid.on_boundary(p))
            update.push_back(p);
        else
            fixed.push_back(p);
    }

    std::vector<double> pot(op.form == DiffusionForm::potential ? n * m : 0);
    std::vector<double> rhs(m), diff(m);
    const int nk[2] = {grid.nodes(0), grid.nodes(1)};
    const std::size_t stride_k[2] = {1, static_cast<std::size_t>(grid.nodes(0))};

    for (long s = 0; s < plan.steps; ++s) {
        const double t = static_cast<double>(s) * plan.dt;
        const double t1 = s + 1 == plan.steps ? op.horizon : static_cast<double>(s + 1) * plan.dt;

        srcA.fill(t, cur, A);
        srcG.fill(t, cur, G);
        for (int k = 0; k < dim; ++k) {
            srcB1[k].fill(t, cur, B1[k]);
            srcB2[k].fill(t, cur, B2[k]);
        }
        if (!pot.empty()) {
            for (std::size_t p = 0; p < n; ++p) {
                const Vector pv = op.potential->value(node_state(cur, p, m));
                for (int c = 0; c < m; ++c) pot[p * m + c] = pv(c);
            }
        }

        for (std::size_t p : update) {
            std::fill(rhs.begin(), rhs.end(), 0.0);
            const double* vp = &cur[p * m];
            const int coord[2] = {grid.ix(p), grid.iy(p)};
            for (int k = 0; k < dim; ++k) {
                const double h = grid.spacing(k);
                const bool lo = coord[k] == 0;
                const bool hi = coord[k] == nk[k] - 1;
                const std::size_t qp = lo && hi ? p : p + (hi ? 0 : stride_k[k]);
                const std::size_t qm = p - (lo ? 0 : stride_k[k]);
                const double* vq = &cur[qp * m];
                const double* vm = &cur[qm * m];

                switch (op.form) {
                    case DiffusionForm::flux:
                        if (A.active) {
                            const double w = (lo || hi) ? 2.0 / (h * h) : 1.0 / (h * h);
                            if (!hi) {
                                for (int c = 0; c < m; ++c) diff[c] = vq[c] - vp[c];
                                axpy_mat(0.5 * w, A.at(p), diff.data(), rhs.data(), m);
                                axpy_mat(0.5 * w, A.at(qp), diff.data(), rhs.data(), m);
                            }
                            if (!lo) {
                                for (int c = 0; c < m; ++c) diff[c] = vm[c] - vp[c];
                                axpy_mat(0.5 * w, A.at(p), diff.data(), rhs.data(), m);
                                axpy_mat(0.5 * w, A.at(qm), diff.data(), rhs.data(), m);
                            }
                        }
                        break;
                    case DiffusionForm::non_divergence:
                    case DiffusionForm::potential: {
                        const double* up = op.form == DiffusionForm::potential ? &pot[p * m] : vp;
                        const double* uq = op.form == DiffusionForm::potential ? &pot[qp * m] : vq;
                        const double* um = op.form == DiffusionForm::potential ? &pot[qm * m] : vm;
                        for (int c = 0; c < m; ++c) {
                            if (lo)
                                diff[c] = 2.0 * (uq[c] - up[c]);
                            else if (hi)
                                diff[c] = 2.0 * (um[c] - up[c]);
                            else
                                diff[c] = uq[c] - 2.0 * up[c] + um[c];
                            diff[c] /= h * h;
                        }
                        if (op.form == DiffusionForm::potential)
                            for (int c = 0; c < m; ++c) rhs[c] += diff[c];
                        else if (A.active)
                            axpy_mat(1.0, A.at(p), diff.data(), rhs.data(), m);
                        break;
                    }
                }

                if (B1[k].active) {
                    // -Div(B1 v), central; zero face flux on Neumann boundaries
                    if (!lo && !hi) {
                        axpy_mat(-0.5 / h, B1[k].at(qp), vq, rhs.data(), m);
                        axpy_mat(0.5 / h, B1[k].at(qm), vm, rhs.data(), m);
                    } else if (lo) {
                        axpy_mat(-1.0 / h, B1[k].at(p), vp, rhs.data(), m);
                        axpy_mat(-1.0 / h, B1[k].at(qp), vq, rhs.data(), m);
                    } else {
                        axpy_mat(1.0 / h, B1[k].at(p), vp, rhs.data(), m);
                        axpy_mat(1.0 / h, B1[k].at(qm), vm, rhs.data(), m);
                    }
                }
                if (B2[k].active && !lo && !hi) {
                    for (int c = 0; c < m; ++c) diff[c] = (vq[c] - vm[c]) / (2.0 * h);
                    axpy_mat(1.0, B2[k].at(p), diff.data(), rhs.data(), m);
                }
            }
            if (G.active) axpy_mat(1.0, G.at(p), vp, rhs.data(), m);
            if (op.forcing) {
                const Vector f = op.forcing(points[p], t);
                for (int c = 0; c < m; ++c) rhs[c] += f(c);
            }
            for (int c = 0; c < m; ++c) next[p * m + c] = vp[c] + plan.dt * rhs[c];
        }

        for (std::size_t p : fixed) {
            if (op.boundary.kind == BoundaryKind::dirichlet) {
                const Vector phi = op.boundary.data(points[p], t1);
                for (int c = 0; c < m; ++c) next[p * m + c] = phi(c);
            } else {
                for (int c = 0; c < m; ++c) next[p * m + c] = 0.0;
            }
        }

        for (double v : next) {
            if (!std::isfinite(v) || std::abs(v) > 1e12) {
                std::ostringstream os;
                os << "nodal magnitude exceeded 1e12 at step " << (s + 1) << " (t = " << t1 << ")";
                throw LabError(ErrorKind::blow_up_or_unstable, os.str());
            }
        }
        std::swap(cur, next);
        if ((s + 1) % plan.stride == 0 || s + 1 == plan.steps) traj.append(t1, cur);
    }
    return traj;
}

}  // namespace poslab::detail
