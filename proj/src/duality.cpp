#include "poslab/duality.hpp"

#include "poslab/errors.hpp"
#include "poslab/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace poslab {

namespace {

std::size_t nearest_node(const Grid& grid, const Point& x) {
    int idx[2] = {0, 0};
    for (int k = 0; k < grid.dimension(); ++k) {
        const double r = (x[k] - grid.domain().lo(k)) / grid.spacing(k);
        idx[k] = std::clamp(static_cast<int>(std::lround(r)), 0, grid.nodes(k) - 1);
    }
    return grid.index(idx[0], idx[1]);
}

// Frozen state u(x, T - t) at the nearest node, linear in time between stamps.
class FrozenState {
public:
    FrozenState(const FieldTrajectory& traj, double horizon) : traj_(traj), horizon_(horizon) {}

    Vector at(const Point& x, double t) const {
        const Grid& g = traj_.grid();
        const std::size_t p = nearest_node(g, x);
        const double s = std::clamp(horizon_ - t, traj_.times().front(), traj_.times().back());
        const auto& ts = traj_.times();
        auto it = std::upper_bound(ts.begin(), ts.end(), s);
        std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        if (hi >= ts.size()) hi = ts.size() - 1;
        const std::size_t lo = hi == 0 ? 0 : hi - 1;
        const double w = hi == lo ? 0.0 : (s - ts[lo]) / (ts[hi] - ts[lo]);
        Vector u(traj_.components());
        for (int c = 0; c < traj_.components(); ++c)
            u(c) = (1.0 - w) * traj_.value(lo, p, c) + w * traj_.value(hi, p, c);
        return u;
    }

private:
    const FieldTrajectory& traj_;
    double horizon_;
};

using Dep = CoefficientField::Dependence;

// Transposed, time-reversed view of a coefficient; state fields are frozen.
CoefficientField dual_field(const CoefficientField& f, const std::shared_ptr<const FrozenState>& frozen, double T,
                            int m) {
    if (f.empty()) return {};
    if (f.dependence() != Dep::state) return f.transposed().time_reversed(T);
    if (!frozen) throw LabError(ErrorKind::invalid_argument, "state-dependent coefficients need a frozen trajectory");
    return CoefficientField::of_space_time(
        [f, frozen](const Point& x, double t) -> Matrix { return f.at_state(frozen->at(x, t)).transpose(); }, m, m,
        f.tag() + "^T(u_hat)");
}

}  // namespace

std::vector<double> sample_nodal(const Grid& grid, int m, const std::function<Vector(const Point&)>& f) {
    std::vector<double> out(grid.size() * m);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const Vector v = f(grid.point(p));
        if (v.size() != m) throw LabError(ErrorKind::invalid_argument, "weight function has the wrong size");
        for (int c = 0; c < m; ++c) out[p * m + c] = v(c);
    }
    return out;
}

OperatorSystem dual_system(const SystemSpec& spec, const FieldTrajectory* frozen, const std::vector<double>& psi,
                           const Grid& grid) {
    check_shapes(spec);
    const int m = spec.m;
    const double T = spec.horizon;
    if (psi.size() != grid.size() * static_cast<std::size_t>(m))
        throw LabError(ErrorKind::grid_mismatch, "terminal weight does not match the grid");
    std::shared_ptr<const FrozenState> state;
    if (frozen) {
        if (!frozen->grid().same_as(grid)) throw LabError(ErrorKind::grid_mismatch, "frozen trajectory grid differs");
        state = std::make_shared<const FrozenState>(*frozen, T);
    }

    OperatorSystem sys;
    sys.m = m;
    sys.domain = spec.domain;
    sys.horizon = T;
    sys.boundary = spec.boundary.kind == BoundaryKind::neumann_homogeneous ? BoundaryCondition::neumann()
                                                                            : BoundaryCondition::homogeneous_dirichlet();
    sys.G = dual_field(spec.g, state, T, m);

    std::vector<CoefficientField> bt;
    for (const auto& bk : spec.b) bt.push_back(dual_field(bk, state, T, m));

    switch (spec.form) {
        case SystemForm::divergence:
            sys.A = dual_field(spec.a, state, T, m);
            sys.B2 = bt;
            break;
        case SystemForm::non_divergence:
            if (spec.a.dependence() == Dep::space_time || spec.a.dependence() == Dep::state)
                throw LabError(ErrorKind::invalid_argument, "non-divergence dual needs an x-independent a");
            sys.non_divergence = true;
            sys.A = dual_field(spec.a, state, T, m);
            sys.B2 = bt;
            break;
        case SystemForm::quasilinear:
            if (spec.potential) {
                if (!state) throw LabError(ErrorKind::invalid_argument, "potential form needs a frozen trajectory");
                const StateMap P = *spec.potential;
                sys.non_divergence = true;
                sys.A = CoefficientField::of_space_time(
                    [P, state](const Point& x, double t) -> Matrix {
                        return mean_coefficient(P, state->at(x, t)).transpose();
                    },
                    m, m, "abar^T(u_hat)");
            } else {
                sys.A = dual_field(spec.a, state, T, m);
            }
            sys.B1 = bt;
            break;
    }

    auto weights = std::make_shared<const std::vector<double>>(psi);
    const Grid g = grid;
    sys.initial = [weights, g, m](const Point& x) -> Vector {
        const std::size_t p = nearest_node(g, x);
        Vector v(m);
        for (int c = 0; c < m; ++c) v(c) = (*weights)[p * m + c];
        return v;
    };
    return sys;
}

FieldTrajectory solve_dual(const SystemSpec& spec, const FieldTrajectory* frozen, const std::vector<double>& psi,
                           const Grid& grid, const SolveOptions& options) {
    return solve_operator(dual_system(spec, frozen, psi, grid), grid, options);
}

double pairing(const Grid& grid, int m, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        double dot = 0.0;
        for (int c = 0; c < m; ++c) dot += a[p * m + c] * b[p * m + c];
        acc += grid.weight(p) * dot;
    }
    return acc;
}

double pairing_gap(const FieldTrajectory& u, const std::vector<double>& psi, const FieldTrajectory& dual) {
    if (!u.grid().same_as(dual.grid()) || u.components() != dual.components())
        throw LabError(ErrorKind::grid_mismatch, "forward and dual trajectories live on different grids");
    const int m = u.components();
    if (psi.size() != u.grid().size() * static_cast<std::size_t>(m))
        throw LabError(ErrorKind::grid_mismatch, "terminal weight does not match the grid");
    const double Tu = u.times().back(), Td = dual.times().back();
    if (std::abs(Tu - Td) > 1e-12 * std::max(1.0, Tu))
        throw LabError(ErrorKind::grid_mismatch, "forward and dual horizons differ");
    const double lhs = pairing(u.grid(), m, u.stamp_data(u.stamps() - 1), psi.data());
    const double rhs = pairing(u.grid(), m, u.stamp_data(0), dual.stamp_data(dual.stamps() - 1));
    return std::abs(lhs - rhs);
}

namespace {

std::vector<double> time_weights(const std::vector<double>& ts) {
    std::vector<double> w(ts.size(), 0.0);
    for (std::size_t s = 0; s + 1 < ts.size(); ++s) {
        const double dt = ts[s + 1] - ts[s];
        w[s] += 0.5 * dt;
        w[s + 1] += 0.5 * dt;
    }
    return w;
}

// d/dx_k of component c at node p: central inside, second-order one-sided at the ends.
double derivative(const FieldTrajectory& f, std::size_t s, std::size_t p, int c, int k) {
    const Grid& g = f.grid();
    const int n = g.nodes(k);
    const int i = k == 0 ? g.ix(p) : g.iy(p);
    const std::size_t step = k == 0 ? 1 : static_cast<std::size_t>(g.nodes(0));
    const double h = g.spacing(k);
    auto v = [&](long off) { return f.value(s, static_cast<std::size_t>(static_cast<long>(p) + off * static_cast<long>(step)), c); };
    if (i == 0) return (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h);
    return (v(1) - v(-1)) / (2.0 * h);
}

}  // namespace

double space_time_norm(const FieldTrajectory& f, double q) {
    if (!(q >= 1.0)) throw LabError(ErrorKind::invalid_argument, "norm exponent must be >= 1");
    const Grid& g = f.grid();
    const int m = f.components();
    const auto wt = time_weights(f.times());
    double acc = 0.0;
    for (std::size_t s = 0; s < f.stamps(); ++s) {
        double inner = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            double sq = 0.0;
            for (int c = 0; c < m; ++c) sq += f.value(s, p, c) * f.value(s, p, c);
            inner += g.weight(p) * std::pow(std::sqrt(sq), q);
        }
        acc += wt[s] * inner;
    }
    return std::pow(acc, 1.0 / q);
}

EnergyNorms energy_norms(const FieldTrajectory& dual, double sigma) {
    if (!(sigma >= 1.0)) throw LabError(ErrorKind::invalid_argument, "sigma must be >= 1");
    const Grid& g = dual.grid();
    const int m = dual.components();
    const auto wt = time_weights(dual.times());
    EnergyNorms out;
    double grad = 0.0;
    for (std::size_t s = 0; s < dual.stamps(); ++s) {
        double l2 = 0.0, d2 = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double w = g.weight(p);
            for (int c = 0; c < m; ++c) {
                const double v = dual.value(s, p, c);
                l2 += w * v * v;
                for (int k = 0; k < g.dimension(); ++k) {
                    const double d = derivative(dual, s, p, c, k);
                    d2 += w * d * d;
                }
            }
        }
        out.sup_l2 = std::max(out.sup_l2, std::sqrt(l2));
        grad += wt[s] * d2;
    }
    out.grad_l2 = std::sqrt(grad);
    out.l_sigma = space_time_norm(dual, sigma);
    return out;
}

namespace {

// J = I conditions on the dual coefficients at the dual's own stamps.
bool identity_certified(const OperatorSystem& sys, const Grid& grid, const std::vector<double>& times) {
    const auto points = grid.points();
    double scale = 0.0, off_a = 0.0, off_b = 0.0, min_g = kInfinity;
    auto sample = [](const CoefficientField& f, const Point& x, double t) { return f(x, t); };
    for (double t : times) {
        for (const Point& x : points) {
            const Matrix a = sample(sys.A, x, t);
            scale = std::max(scale, max_abs(a));
            off_a = std::max(off_a, max_offdiag_abs(a));
            for (const auto* list : {&sys.B1, &sys.B2})
                for (const auto& b : *list) {
                    if (b.empty()) continue;
                    const Matrix bv = sample(b, x, t);
                    scale = std::max(scale, max_abs(bv));
                    off_b = std::max(off_b, max_offdiag_abs(bv));
                }
            if (!sys.G.empty()) {
                const Matrix gv = sample(sys.G, x, t);
                scale = std::max(scale, max_abs(gv));
                min_g = std::min(min_g, min_offdiag(gv));
            }
        }
    }
    const double tol = 1e-9 * (1.0 + scale);
    return off_a <= tol && off_b <= tol && (min_g >= -tol || !std::isfinite(min_g));
}

}  // namespace

TransferReport positivity_transfer_experiment(const SystemSpec& spec, const Grid& grid,
                                              const std::vector<WeightFunction>& weights,
                                              const TransferOptions& options) {
    check_shapes(spec);
    const int m = spec.m;
    const int N = spec.domain.dimension();
    TransferReport rep;
    rep.sigma = options.sigma > 0.0 ? options.sigma : sigma_exponent(N, SigmaVariant::standard).value;
    rep.q0 = N / 2.0 + 1.0;

    const FieldTrajectory u = simulate(spec, grid, options.forward);
    const std::vector<double> u0 = u.stamp_values(0);
    double u0_max = 0.0;
    for (double v : u0) u0_max = std::max(u0_max, std::abs(v));
    const double dt = options.forward.dt > 0.0 ? options.forward.dt
                                               : options.forward.safety * stable_timestep(spec, grid);
    rep.tol = options.tol >= 0.0 ? options.tol : default_tolerance(grid, dt, u0_max);
    rep.forward_min = *std::min_element(u.raw().begin(), u.raw().end());

    std::vector<FieldTrajectory> smoothed;
    for (int n : options.levels) smoothed.push_back(mollify(u, n, options.mollifier));

    for (const auto& wf : weights) {
        const std::vector<double> psi = sample_nodal(grid, m, wf.psi);
        const double forward = pairing(grid, m, u.stamp_data(u.stamps() - 1), psi.data());
        for (std::size_t li = 0; li < options.levels.size(); ++li) {
            const FieldTrajectory& un = smoothed[li];
            const OperatorSystem dsys = dual_system(spec, &un, psi, grid);
            const FieldTrajectory dual = solve_operator(dsys, grid, options.dual);
            TransferCell cell;
            cell.psi_id = wf.id;
            cell.level = options.levels[li];
            cell.forward_pairing = forward;
            cell.dual_pairing = pairing(grid, m, u0.data(), dual.stamp_data(dual.stamps() - 1));
            cell.gap = std::abs(cell.forward_pairing - cell.dual_pairing);
            cell.norms = energy_norms(dual, rep.sigma);
            cell.min_pairing = std::min(cell.forward_pairing, cell.dual_pairing);
            cell.dual_min = *std::min_element(dual.raw().begin(), dual.raw().end());
            cell.dual_certified = identity_certified(dsys, grid, dual.times());
            cell.dual_nonnegative = cell.dual_min >= -rep.tol;

            if (!spec.g.empty()) {
                FieldTrajectory gn(grid, 1);
                std::vector<double> buf(grid.size());
                const auto points = grid.points();
                for (std::size_t s = 0; s < un.stamps(); ++s) {
                    for (std::size_t p = 0; p < grid.size(); ++p) {
                        const Matrix gv = spec.g.dependence() == Dep::state ? spec.g.at_state(un.node_vector(s, p))
                                                                            : spec.g(points[p], un.time(s));
                        buf[p] = gv.norm();
                    }
                    gn.append(un.time(s), buf);
                }
                cell.coefficient_norm = space_time_norm(gn, rep.q0);
            }
            rep.cells.push_back(cell);
        }
    }
    return rep;
}

void write_transfer_csv(std::ostream& os, const TransferReport& report) {
    os << kCsvSchema << " transfer\n";
    os << "psi_id,n,gap,sup_l2,grad_l2,l_sigma,min_pairing\n";
    for (const auto& c : report.cells)
        os << c.psi_id << ',' << c.level << ',' << format_real(c.gap) << ',' << format_real(c.norms.sup_l2) << ','
           << format_real(c.norms.grad_l2) << ',' << format_real(c.norms.l_sigma) << ','
           << format_real(c.min_pairing) << '\n';
}

}  // namespace poslab
