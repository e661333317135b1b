#include "poslab/riccati.hpp"

#include "poslab/errors.hpp"
#include "poslab/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace poslab {

std::string to_string(RiccatiClass c) {
    switch (c) {
        case RiccatiClass::constant: return "constant";
        case RiccatiClass::converges_to_root: return "converges-to-root";
        case RiccatiClass::blow_up: return "blow-up";
        case RiccatiClass::leaves_sign_window: return "leaves-sign-window";
        case RiccatiClass::unresolved: return "unresolved";
    }
    return "unresolved";
}

RiccatiRhs riccati_rhs(RiccatiKind kind, TimeMatrix g) {
    constexpr double em1 = std::numbers::e - 1.0;
    RiccatiRhs r;
    if (kind == RiccatiKind::nilpotent) {
        r.alpha = [g](double t) { return g(t)(1, 0); };
        r.beta = [g](double t) {
            const Matrix m = g(t);
            return m(0, 0) - m(1, 1);
        };
        r.gamma = [g](double t) { return -g(t)(0, 1); };
    } else {
        r.alpha = [g](double t) { return em1 * g(t)(0, 1); };
        r.beta = [g](double t) {
            const Matrix m = g(t);
            return -(m(0, 0) - m(1, 1));
        };
        r.gamma = [g](double t) { return -g(t)(1, 0) / em1; };
    }
    return r;
}

namespace {

double hermite(double t0, double y0, double f0, double t1, double y1, double f1, double t) {
    const double h = t1 - t0;
    if (h <= 0.0) return y1;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1;
}

struct Trace {
    std::vector<double> t, y, f;
};

// Dormand-Prince 5(4). Stops after the first accepted step for which
// `stop(y)` holds, or at t_end.
template <class F, class Stop>
Trace integrate(const F& rhs, double t0, double y0, double t_end, const RiccatiOptions& opt, Stop stop) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    Trace tr;
    double t = t0, y = y0, k1 = rhs(t, y);
    tr.t.push_back(t);
    tr.y.push_back(y);
    tr.f.push_back(k1);
    double h = opt.initial_step;
    while (t < t_end) {
        h = std::min({h, opt.max_step, t_end - t});
        const double k2 = rhs(t + c2 * h, y + h * a21 * k1);
        const double k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const double k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = rhs(t + h, y5);
        const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(y), std::abs(y5));
        const double ratio = std::abs(err) / scale;
        if (std::isfinite(y5) && std::isfinite(k7) && ratio <= 1.0) {
            t = (t_end - t - h <= 1e-15 * std::max(1.0, std::abs(t_end))) ? t_end : t + h;
            y = y5;
            k1 = k7;
            tr.t.push_back(t);
            tr.y.push_back(y);
            tr.f.push_back(k1);
            if (stop(y)) break;
            const double grow = ratio == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(ratio, -0.2)));
            h *= grow;
        } else {
            const double shrink = std::isfinite(ratio) ? std::max(0.1, 0.9 * std::pow(ratio, -0.2)) : 0.25;
            h *= std::min(shrink, 0.9);
            if (h < opt.min_step * (1.0 + std::abs(t))) {
                std::ostringstream os;
                os << "step size underflow at t = " << t << " (y = " << y << ")";
                throw LabError(ErrorKind::integration_stalled, os.str());
            }
        }
    }
    return tr;
}

// First crossing of zero between samples i-1 and i, by bisection on the Hermite interpolant.
double bisect_crossing(const Trace& tr, std::size_t i, double level, double tol) {
    double lo = tr.t[i - 1], hi = tr.t[i];
    auto eval = [&](double s) {
        return hermite(tr.t[i - 1], tr.y[i - 1], tr.f[i - 1], tr.t[i], tr.y[i], tr.f[i], s) - level;
    };
    const double flo = eval(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((eval(mid) > 0.0) == (flo > 0.0))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool alpha_vanishes(const RiccatiRhs& rhs, double horizon) {
    constexpr int samples = 64;
    for (int i = 0; i <= samples; ++i)
        if (rhs.alpha(horizon * i / samples) != 0.0) return false;
    return true;
}

// Pole of y after the trajectory passed the magnitude cap: integrate z = 1/y,
// z' = -(alpha + beta z + gamma z^2), which is regular through the pole.
double locate_pole(const RiccatiRhs& rhs, double t1, double y1, double horizon, const RiccatiOptions& opt) {
    const double z1 = 1.0 / y1;
    auto zrhs = [&rhs](double t, double z) { return -(rhs.alpha(t) + (rhs.beta(t) + rhs.gamma(t) * z) * z); };
    const double slope = zrhs(t1, z1);
    double reach = std::abs(slope) > 0.0 ? 4.0 * std::abs(z1 / slope) : 1.0;
    reach = std::max(reach, 1e-6);
    RiccatiOptions zopt = opt;
    zopt.initial_step = reach / 64;
    zopt.max_step = reach / 8;
    const bool positive = z1 > 0.0;
    const Trace tr = integrate(zrhs, t1, z1, t1 + std::max(reach, horizon - t1), zopt,
                               [positive](double z) { return (z > 0.0) != positive; });
    for (std::size_t i = 1; i < tr.t.size(); ++i)
        if ((tr.y[i] > 0.0) != positive) return bisect_crossing(tr, i, 0.0, opt.blow_up_time_tol);
    return std::abs(slope) > 0.0 ? t1 - z1 / slope : kInfinity;
}

}  // namespace

std::vector<double> linear_closed_form(const std::function<double(double)>& beta,
                                       const std::function<double(double)>& gamma, double y0,
                                       const std::vector<double>& times) {
    constexpr int order = 10;
    std::vector<double> gn, gw;
    gauss_legendre_unit(order, gn, gw);

    auto integral = [&](const std::function<double(double)>& f, double a, double b) {
        double acc = 0.0;
        for (int i = 0; i < order; ++i) acc += gw[i] * f(a + (b - a) * gn[i]);
        return acc * (b - a);
    };

    std::vector<double> out;
    out.reserve(times.size());
    double B = 0.0;      // int_0^t beta
    double inner = 0.0;  // int_0^t gamma(s) exp(-B(s)) ds
    double prev = 0.0;
    for (double t : times) {
        if (t < prev) throw LabError(ErrorKind::invalid_argument, "closed form needs nondecreasing times");
        if (t > prev) {
            const double a = prev;
            const double Ba = B;
            auto weighted = [&](double s) { return gamma(s) * std::exp(-(Ba + integral(beta, a, s))); };
            inner += integral(weighted, a, t);
            B += integral(beta, a, t);
            prev = t;
        }
        out.push_back(std::exp(B) * (y0 + inner));
    }
    return out;
}

double RiccatiSolution::value(double t) const {
    if (times.empty()) throw LabError(ErrorKind::window_exceeded, "empty Riccati trajectory");
    const double slack = 1e-12 * std::max(1.0, std::abs(times.back()));
    if (t < -slack || t > times.back() + slack) {
        std::ostringstream os;
        os << "Riccati trajectory defined on [0, " << times.back() << "], requested t = " << t;
        throw LabError(ErrorKind::window_exceeded, os.str());
    }
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    return hermite(times[i - 1], values[i - 1], slopes[i - 1], times[i], values[i], slopes[i], t);
}

double RiccatiSolution::derivative(double t) const { return rhs_(t, value(t)); }

RiccatiSolution solve_riccati(RiccatiKind kind, TimeMatrix g, double y0, double horizon,
                              const RiccatiOptions& opt) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw LabError(ErrorKind::invalid_argument, "Riccati horizon must be positive and finite");
    if (!std::isfinite(y0)) throw LabError(ErrorKind::invalid_argument, "non-finite Riccati initial value");

    RiccatiSolution sol;
    sol.kind = kind;
    sol.horizon = horizon;
    sol.rhs_ = riccati_rhs(kind, std::move(g));
    const RiccatiRhs& rhs = sol.rhs_;

    const double cap = opt.magnitude_cap;
    Trace tr = integrate(rhs, 0.0, y0, horizon, opt, [cap](double y) { return std::abs(y) > cap; });
    const bool capped = std::abs(tr.y.back()) > cap;

    if (!capped && alpha_vanishes(rhs, horizon)) {
        const std::vector<double> exact = linear_closed_form(rhs.beta, rhs.gamma, y0, tr.t);
        double worst = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) {
            worst = std::max(worst, std::abs(exact[i] - tr.y[i]));
            tr.y[i] = exact[i];
            tr.f[i] = rhs(tr.t[i], exact[i]);
        }
        sol.closed_form_used = true;
        sol.closed_form_discrepancy = worst;
    }

    sol.times = tr.t;
    sol.values = tr.y;
    sol.slopes = tr.f;

    if (y0 > 0.0) {
        sol.sign_exit_time = 0.0;
    } else {
        for (std::size_t i = 1; i < tr.t.size(); ++i) {
            if (tr.y[i] > 0.0) {
                sol.sign_exit_time = capped && i + 1 == tr.t.size() && tr.y[i - 1] < 0.0
                                         ? tr.t[i - 1]
                                         : bisect_crossing(tr, i, 0.0, 1e-13);
                break;
            }
        }
    }

    const double t_end = tr.t.back();
    const double a = rhs.alpha(t_end), b = rhs.beta(t_end), c = rhs.gamma(t_end);
    sol.discriminant = b * b - 4.0 * a * c;
    if (a != 0.0 && sol.discriminant >= 0.0) {
        const double sq = std::sqrt(sol.discriminant);
        double r1 = (-b - sq) / (2.0 * a), r2 = (-b + sq) / (2.0 * a);
        if (r1 > r2) std::swap(r1, r2);
        sol.roots = std::make_pair(r1, r2);
    } else if (a == 0.0 && b != 0.0) {
        sol.roots = std::make_pair(-c / b, -c / b);
    }

    double drift = 0.0;
    for (double v : tr.y) drift = std::max(drift, std::abs(v - y0));

    if (capped) {
        sol.classification = RiccatiClass::blow_up;
        sol.blow_up_time = locate_pole(rhs, t_end, tr.y.back(), horizon, opt);
    } else if (drift <= 1e-12 * (1.0 + std::abs(y0))) {
        sol.classification = RiccatiClass::constant;
    } else if (sol.roots && (std::abs(tr.y.back() - sol.roots->first) <= opt.root_tol ||
                             std::abs(tr.y.back() - sol.roots->second) <= opt.root_tol)) {
        sol.classification = RiccatiClass::converges_to_root;
        sol.root = std::abs(tr.y.back() - sol.roots->first) <= std::abs(tr.y.back() - sol.roots->second)
                       ? sol.roots->first
                       : sol.roots->second;
    } else if (std::isfinite(sol.sign_exit_time)) {
        sol.classification = RiccatiClass::leaves_sign_window;
    } else {
        sol.classification = RiccatiClass::unresolved;
    }
    return sol;
}

}  // namespace poslab
