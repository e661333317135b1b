#include "poslab/monitor.hpp"

#include "poslab/errors.hpp"
#include "poslab/pde_lab.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace poslab {

Vector negative_part(const Vector& v) { return (-v).cwiseMax(0.0); }

std::vector<double> negative_part(const std::vector<double>& values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::max(-values[i], 0.0);
    return out;
}

std::string to_string(PositivityVerdict v) { return v == PositivityVerdict::nonnegative ? "nonnegative" : "violated"; }

double PositivityReport::overall_min() const {
    return component_min.empty() ? 0.0 : *std::min_element(component_min.begin(), component_min.end());
}

double default_tolerance(const Grid& grid, double dt, double max_abs_initial) {
    double h = grid.spacing(0);
    if (grid.dimension() == 2) h = std::max(h, grid.spacing(1));
    return 10.0 * (h * h + dt) * (1.0 + max_abs_initial);
}

PositivityReport monitor(const FieldTrajectory& traj, double tol) {
    if (!(tol >= 0.0)) throw LabError(ErrorKind::invalid_argument, "tolerance must be nonnegative");
    const Grid& grid = traj.grid();
    const int m = traj.components();
    PositivityReport rep;
    rep.tol = tol;
    rep.component_min.assign(m, kInfinity);
    rep.component_min_time.assign(m, 0.0);

    for (std::size_t s = 0; s < traj.stamps(); ++s) {
        const double* v = traj.stamp_data(s);
        double e = 0.0;
        double worst = 0.0;
        std::size_t worst_node = 0;
        int worst_comp = -1;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double w = grid.weight(p);
            for (int c = 0; c < m; ++c) {
                const double x = v[p * m + c];
                if (x < rep.component_min[c]) {
                    rep.component_min[c] = x;
                    rep.component_min_time[c] = traj.time(s);
                }
                if (x < 0.0) e += w * x * x;
                if (x < -tol && x < worst) {
                    worst = x;
                    worst_node = p;
                    worst_comp = c;
                }
            }
        }
        rep.times.push_back(traj.time(s));
        rep.energy.push_back(e);
        if (worst_comp >= 0 && !rep.violation)
            rep.violation = Violation{traj.time(s), worst_comp, grid.point(worst_node), worst};
    }

    for (std::size_t s = 0; s + 1 < rep.energy.size(); ++s) {
        if (rep.energy[s] > 1e-14) {
            const double ratio = (rep.energy[s + 1] - rep.energy[s]) / (rep.times[s + 1] - rep.times[s]) / rep.energy[s];
            rep.gronwall_ratio = rep.gronwall_ratio ? std::max(*rep.gronwall_ratio, ratio) : ratio;
        }
    }
    rep.verdict = rep.violation ? PositivityVerdict::violated : PositivityVerdict::nonnegative;
    return rep;
}

PositivityReport transformed_monitor(const FieldTrajectory& W, const TransformCertificate& cert, double tol) {
    const double T = W.times().back();
    if (T > cert.t_valid() * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "trajectory horizon " << T << " exceeds the certificate window " << cert.t_valid();
        throw LabError(ErrorKind::window_exceeded, os.str());
    }
    PositivityReport rep = monitor(apply_certificate(W, cert), tol);
    rep.transformed = true;
    rep.inverse_window = cert.t_pos();
    const int m = W.components();
    for (std::size_t s = 0; s < W.stamps(); ++s) {
        if (W.time(s) > cert.t_pos()) break;
        const double* v = W.stamp_data(s);
        double lowest = kInfinity;
        for (std::size_t k = 0; k < W.grid().size() * static_cast<std::size_t>(m); ++k) lowest = std::min(lowest, v[k]);
        rep.source_min_in_window = rep.source_min_in_window ? std::min(*rep.source_min_in_window, lowest) : lowest;
    }
    return rep;
}

void write_energy_csv(std::ostream& os, const PositivityReport& report) {
    os << kCsvSchema << " energy\n";
    os << "t,energy\n";
    for (std::size_t s = 0; s < report.times.size(); ++s)
        os << format_real(report.times[s]) << ',' << format_real(report.energy[s]) << '\n';
}

}  // namespace poslab
