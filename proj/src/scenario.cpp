#include "poslab/scenario.hpp"

#include "poslab/errors.hpp"
#include "poslab/pde_lab.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace poslab {

std::string to_string(ExpectedPositivity e) {
    switch (e) {
        case ExpectedPositivity::nonnegative: return "nonnegative";
        case ExpectedPositivity::violated: return "violated";
        case ExpectedPositivity::any: return "any";
    }
    return "any";
}

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::standard: return "standard";
        case ScenarioKind::transfer: return "transfer";
        case ScenarioKind::sweep: return "sweep";
    }
    return "standard";
}

namespace {

constexpr double pi = std::numbers::pi;

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

double hump(const Point& x) { return std::sin(x[0]) * std::sin(x[1]); }

InitialData scaled_hump(std::vector<double> scales) {
    return [scales](const Point& x) {
        Vector v(static_cast<Eigen::Index>(scales.size()));
        for (std::size_t i = 0; i < scales.size(); ++i) v(i) = scales[i] * hump(x);
        return v;
    };
}

SystemSpec base_square(int m, Matrix a, CoefficientField g, InitialData psi0, double T, std::string name) {
    SystemSpec s;
    s.m = m;
    s.domain = Domain::unit_pi_square();
    s.form = SystemForm::divergence;
    s.a = CoefficientField::constant(std::move(a), "a");
    s.g = std::move(g);
    s.initial = std::move(psi0);
    s.horizon = T;
    s.name = std::move(name);
    return s;
}

// Sign-change family on (0,pi)^2 with boundary value [1,1] and data [1 + h, 1 - h].
Scenario sign_change(std::string name, std::string summary, Matrix a, Matrix g, double growth, double T,
                     ExpectedPositivity expected, CertificateVerdict verdict) {
    Scenario sc;
    sc.name = name;
    sc.summary = std::move(summary);
    sc.horizon = T;
    sc.expected_certificate = verdict;
    sc.expected_positivity = expected;
    sc.build = [a, g, name](double horizon) {
        SystemSpec s = base_square(2, a, CoefficientField::constant(g, "g"),
                                   [](const Point& x) {
                                       Vector v(2);
                                       v << 1.0 + hump(x), 1.0 - hump(x);
                                       return v;
                                   },
                                   horizon, name);
        s.boundary = BoundaryCondition::dirichlet([](const Point&, double) { return Vector::Ones(2).eval(); });
        return s;
    };
    AnalyticReference ref;
    ref.W = [growth](const Point& x, double t) {
        Vector v(2);
        const double e = hump(x) * std::exp(growth * t);
        v << 1.0 + e, 1.0 - e;
        return v;
    };
    ref.tolerance = 0.02;
    ref.formula = growth > 0 ? "W = [1 + h e^t, 1 - h e^t], h = sin x sin y" : "W = [1 + h e^-t, 1 - h e^-t], h = sin x sin y";
    sc.reference = ref;
    return sc;
}

CertificateSpec nilpotent_spec(double b0, double shift = 0.0) {
    CertificateSpec c;
    c.kind = "nilpotent-exp";
    c.initial = b0;
    c.shift_rate = shift;
    return c;
}

CertificateSpec idempotent_spec(double c0) {
    CertificateSpec c;
    c.kind = "idempotent-exp";
    c.initial = c0;
    return c;
}

Scenario reaction_scenario(std::string name, std::string summary, Matrix g, CertificateSpec cert,
                           std::vector<double> scales, double T, ExpectedPositivity expected) {
    Scenario sc;
    sc.name = name;
    sc.summary = std::move(summary);
    sc.horizon = T;
    sc.certificate = std::move(cert);
    sc.expected_positivity = expected;
    const int m = static_cast<int>(g.rows());
    sc.build = [g, scales, name, m](double horizon) {
        return base_square(m, Matrix::Identity(m, m), CoefficientField::constant(g, "g"), scaled_hump(scales),
                           horizon, name);
    };
    return sc;
}

std::vector<Scenario> make_registry() {
    std::vector<Scenario> r;

    r.push_back(sign_change("ctrex-growing", "a = I, g = 1/2 [[3,-3],[-3,3]]; W2 = 1 - h e^t turns negative",
                            Matrix::Identity(2, 2), 0.5 * mat2(3, -3, -3, 3), 1.0, std::log(2.0),
                            ExpectedPositivity::violated, CertificateVerdict::sign_failed));
    r.push_back(sign_change("ctrex-decaying", "a = I, g = 1/2 [[1,-1],[-1,1]]; W = [1 + h e^-t, 1 - h e^-t] stays >= 0",
                            Matrix::Identity(2, 2), 0.5 * mat2(1, -1, -1, 1), -1.0, 3.0,
                            ExpectedPositivity::nonnegative, CertificateVerdict::sign_failed));
    r.push_back(sign_change("ctrex-distinct-diff", "a = diag(1, 1/2), g = [[3/2,-3/2],[-1,1]]; distinct diffusivities",
                            mat2(1, 0, 0, 0.5), mat2(1.5, -1.5, -1, 1), 1.0, std::log(2.0),
                            ExpectedPositivity::violated, CertificateVerdict::sign_failed));
    {
        // a = 1/2 [[al,-be],[be,al]] with the reaction matrix that makes [1 + h e^t, 1 - h e^t] exact.
        const double al = 1.0, be = 3.0;
        const Matrix a = 0.5 * mat2(al, -be, be, al);
        const Matrix g = 0.5 * mat2(1 + al + be, -(1 + al + be), -(1 + al - be), 1 + al - be);
        r.push_back(sign_change("ctrex-rotation", "a = 1/2 [[1,-3],[3,1]] elliptic with complex spectrum; W2 turns negative",
                                a, g, 1.0, std::log(2.0), ExpectedPositivity::violated,
                                CertificateVerdict::diagonality_failed));
    }
    {
        CertificateSpec c;
        c.kind = "diag-exp";
        c.generator = mat2(0, 1, 1, 0);
        c.rate = 2.0;
        c.gamma_rate = Vector::Zero(2);
        Scenario sc = reaction_scenario("ex-commuting-K",
                                        "g = [[0,-1],[-1,0]], J = exp(2tK) with K = [[0,1],[1,0]] commuting with g",
                                        mat2(0, -1, -1, 0), c, {1.0, 0.5}, 1.0, ExpectedPositivity::any);
        r.push_back(sc);
    }
    {
        Scenario sc;
        sc.name = "ex-ex1";
        sc.summary = "g = [[-1,-e^-t],[0,-1]], J = e^t [[1,b],[0,1]] with b = -e^-t";
        sc.horizon = 1.0;
        sc.certificate = nilpotent_spec(-1.0, 1.0);
        sc.expected_positivity = ExpectedPositivity::nonnegative;
        sc.build = [](double horizon) {
            auto g = CoefficientField::of_time([](double t) { return mat2(-1, -std::exp(-t), 0, -1); }, 2, 2,
                                               "[[-1,-e^-t],[0,-1]]");
            return base_square(2, Matrix::Identity(2, 2), g, scaled_hump({2.0, 1.0}), horizon, "ex-ex1");
        };
        r.push_back(sc);
    }
    r.push_back(reaction_scenario("ex-nilpotent-b", "g = [[2,-3/4],[1,0]], b(0) = -1; b converges to -3/2",
                                  mat2(2, -0.75, 1, 0), nilpotent_spec(-1.0), {2.0, 1.0}, 1.0,
                                  ExpectedPositivity::nonnegative));
    r.push_back(reaction_scenario("ex-nilpotent-b-blowup",
                                  "g = [[2,-1],[1,2]], b(0) = -1; b = tan(t - pi/4) leaves b <= 0 at pi/4",
                                  mat2(2, -1, 1, 2), nilpotent_spec(-1.0), {2.0, 1.0}, 1.5,
                                  ExpectedPositivity::violated));
    r.push_back(reaction_scenario("ex-idempotent-c", "g = [[-1,0],[-1/2,0]], c(0) = -1; c stays negative",
                                  mat2(-1, 0, -0.5, 0), idempotent_spec(-1.0), {1.0, 2.0}, 1.0,
                                  ExpectedPositivity::nonnegative));
    {
        CertificateSpec c;
        c.kind = "composed";
        c.stages = {nilpotent_spec(-1.0), idempotent_spec(-1.0)};
        r.push_back(reaction_scenario("ex-compose-bc", "g = [[-1,-1/2],[-1/2,0]]; nilpotent b then idempotent c",
                                      mat2(-1, -0.5, -0.5, 0), c, {1.2, 1.0}, 1.5, ExpectedPositivity::any));
    }
    {
        CertificateSpec c;
        c.kind = "composed";
        c.stages = {idempotent_spec(-0.23), nilpotent_spec(-2.0)};
        r.push_back(reaction_scenario("ex-compose-cb", "g = [[-1,-1/2],[-1/2,0]]; idempotent c then nilpotent b",
                                      mat2(-1, -0.5, -0.5, 0), c, {1.0, 1.0}, 1.5, ExpectedPositivity::any));
    }
    {
        Matrix g(3, 3);
        g << 2, -0.75, 2, 1, 0, 1, 0.5, -0.3, -1;
        CertificateSpec one;
        one.kind = "constant";
        one.matrix = Matrix::Identity(1, 1);
        CertificateSpec c;
        c.kind = "block-diagonal";
        c.blocks = {nilpotent_spec(-1.0), one};
        Scenario sc = reaction_scenario("ex-block-3x3", "3x3 block system, J = blockdiag(e^N, 1) with X1, X2 couplings",
                                        g, c, {2.0, 1.0, 1.0}, 1.0, ExpectedPositivity::nonnegative);
        sc.build = [g](double horizon) {
            Matrix a = Matrix::Identity(3, 3);
            a(2, 2) = 0.5;
            return base_square(3, a, CoefficientField::constant(g, "g"), scaled_hump({2.0, 1.0, 1.0}), horizon,
                               "ex-block-3x3");
        };
        r.push_back(sc);
    }
    {
        Scenario sc;
        sc.name = "ex-diag-exp";
        sc.summary = "1-D, g = [[-1,1/2],[3/10,-1]], J = diag(e^{x/2}, e^{-3x/10})";
        sc.horizon = 1.0;
        CertificateSpec c;
        c.kind = "diag-exp";
        c.gamma_slope = Matrix::Zero(2, 2);
        c.gamma_slope(0, 0) = 0.5;
        c.gamma_slope(1, 0) = -0.3;
        c.gamma_rate = Vector::Zero(2);
        c.generator = Matrix::Zero(2, 2);
        sc.certificate = c;
        sc.expected_positivity = ExpectedPositivity::nonnegative;
        sc.build = [](double horizon) {
            SystemSpec s;
            s.m = 2;
            s.domain = Domain::interval(0.0, pi);
            s.a = CoefficientField::constant(Matrix::Identity(2, 2), "I");
            s.g = CoefficientField::constant(mat2(-1, 0.5, 0.3, -1), "g");
            s.initial = [](const Point& x) { return Vector::Constant(2, std::sin(x[0])).eval(); };
            s.horizon = horizon;
            s.name = "ex-diag-exp";
            return s;
        };
        r.push_back(sc);
    }
    {
        Scenario sc;
        sc.name = "dual-quasilinear";
        sc.summary = "1-D quasilinear a(u) = diag(1 + u1^2, 1 + u2^2); pairings through mollified dual solves";
        sc.kind = ScenarioKind::transfer;
        sc.horizon = 1.0;
        sc.expected_positivity = ExpectedPositivity::nonnegative;
        sc.build = [](double horizon) {
            SystemSpec s;
            s.m = 2;
            s.domain = Domain::interval(0.0, pi);
            s.form = SystemForm::quasilinear;
            s.a = CoefficientField::of_state(
                [](const Vector& u) {
                    Matrix a = Matrix::Zero(2, 2);
                    a(0, 0) = 1.0 + u(0) * u(0);
                    a(1, 1) = 1.0 + u(1) * u(1);
                    return a;
                },
                2, 2, "diag(1+u1^2, 1+u2^2)");
            s.g = CoefficientField::constant(mat2(-1, 0.5, 0.5, -1), "g");
            s.initial = [](const Point& x) {
                Vector v(2);
                v << std::sin(x[0]), 0.5 * std::sin(x[0]);
                return v;
            };
            s.horizon = horizon;
            s.name = "dual-quasilinear";
            return s;
        };
        for (const auto& [id, c] : std::vector<std::pair<std::string, double>>{
                 {"bump-left", pi / 4}, {"bump-center", pi / 2}, {"bump-right", 3 * pi / 4}}) {
            const double center = c;
            sc.weights.push_back({id, [center](const Point& x) {
                                      const double s = (x[0] - center) / (pi / 4);
                                      const double v = std::abs(s) < 1.0 ? (1 - s * s) * (1 - s * s) : 0.0;
                                      return Vector::Constant(2, v).eval();
                                  }});
        }
        r.push_back(sc);
    }
    {
        Scenario sc;
        sc.name = "sweep-certified";
        sc.summary = "100 random 2x2 systems with diagonal a and off-diagonal g >= 0; all must stay >= -tol";
        sc.kind = ScenarioKind::sweep;
        sc.nx = 17;
        sc.horizon = 0.5;
        sc.sweep_count = 100;
        sc.expected_positivity = ExpectedPositivity::nonnegative;
        r.push_back(sc);
    }
    return r;
}

void require_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node.IsMap()) throw LabError(ErrorKind::config, where + ": expected a mapping");
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw LabError(ErrorKind::config, where + ": unknown key '" + key + "'");
    }
}

template <class T>
T read(const YAML::Node& node, const std::string& where) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw LabError(ErrorKind::config, where + ": malformed value");
    }
}

}  // namespace

const std::vector<Scenario>& registry() {
    static const std::vector<Scenario> r = make_registry();
    return r;
}

const Scenario& find_scenario(const std::string& name) {
    for (const auto& s : registry())
        if (s.name == name) return s;
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; known:";
    for (const auto& s : registry()) os << ' ' << s.name;
    throw LabError(ErrorKind::unknown_scenario, os.str());
}

RunConfig run_config_from_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw LabError(ErrorKind::config, std::string("parse error: ") + e.what());
    }
    RunConfig cfg;
    if (root.IsNull()) return cfg;
    require_keys(root, {"scenario", "output", "seed", "grid", "time", "tolerances", "mollification"}, "config");
    if (root["scenario"]) cfg.scenario = read<std::string>(root["scenario"], "scenario");
    if (root["output"]) cfg.output_dir = read<std::string>(root["output"], "output");
    if (root["seed"]) cfg.seed = read<std::uint64_t>(root["seed"], "seed");
    if (const auto g = root["grid"]) {
        require_keys(g, {"nx"}, "grid");
        if (g["nx"]) cfg.nx = read<int>(g["nx"], "grid.nx");
    }
    if (const auto t = root["time"]) {
        require_keys(t, {"dt", "T"}, "time");
        if (t["dt"]) cfg.dt = read<double>(t["dt"], "time.dt");
        if (t["T"]) cfg.T = read<double>(t["T"], "time.T");
    }
    if (const auto t = root["tolerances"]) {
        require_keys(t, {"positivity"}, "tolerances");
        if (t["positivity"]) cfg.tol = read<double>(t["positivity"], "tolerances.positivity");
    }
    if (const auto m = root["mollification"]) {
        require_keys(m, {"levels"}, "mollification");
        if (m["levels"]) cfg.levels = read<std::vector<int>>(m["levels"], "mollification.levels");
    }
    if (cfg.nx && *cfg.nx < 3) throw LabError(ErrorKind::config, "grid.nx must be >= 3");
    if (cfg.dt && !(*cfg.dt > 0.0)) throw LabError(ErrorKind::config, "time.dt must be positive");
    if (cfg.T && !(*cfg.T > 0.0)) throw LabError(ErrorKind::config, "time.T must be positive");
    if (cfg.tol && !(*cfg.tol >= 0.0)) throw LabError(ErrorKind::config, "tolerances.positivity must be >= 0");
    for (int n : cfg.levels)
        if (n < 1) throw LabError(ErrorKind::config, "mollification levels must be >= 1");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LabError(ErrorKind::config, "cannot read config '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return run_config_from_yaml(os.str());
}

std::string default_output_dir() {
    const char* env = std::getenv("POSLAB_OUTPUT_DIR");
    return env && *env ? std::string(env) : std::string("poslab-out");
}

SweepResult certificate_sweep(std::uint64_t seed, int count, int nx, double horizon) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SweepResult res;
    const Domain dom = Domain::unit_pi_square();
    const Grid grid = discretize(dom, nx);
    const auto samples = sample_points(dom, 5);
    const std::vector<double> times{0.0, horizon};
    for (int run = 0; run < count; ++run) {
        const Matrix a = mat2(uniform(0.5, 2.0), 0.0, 0.0, uniform(0.5, 2.0));
        const Matrix g = mat2(uniform(-2.0, 2.0), uniform(0.0, 2.0), uniform(0.0, 2.0), uniform(-2.0, 2.0));
        struct Bump {
            double cx, cy, r, amp;
        };
        std::vector<Bump> bumps;
        const int nb = 1 + static_cast<int>(unit(rng) * 3.0);
        for (int k = 0; k < 2 * nb; ++k)
            bumps.push_back({uniform(0.5, pi - 0.5), uniform(0.5, pi - 0.5), uniform(0.3, 1.2), uniform(0.0, 2.0)});
        auto psi0 = [bumps, nb](const Point& x) {
            Vector v = Vector::Zero(2);
            for (int k = 0; k < 2 * nb; ++k) {
                const Bump& b = bumps[k];
                const double s2 = ((x[0] - b.cx) * (x[0] - b.cx) + (x[1] - b.cy) * (x[1] - b.cy)) / (b.r * b.r);
                if (s2 < 1.0) v(k % 2) += b.amp * (1 - s2) * (1 - s2);
            }
            return v;
        };
        SystemSpec spec = base_square(2, a, CoefficientField::constant(g, "g"), psi0, horizon, "sweep");
        ++res.runs;
        const CertificateReport cr = check_certificate(identity_certificate(2), spec, samples, times);
        if (cr.verdict == CertificateVerdict::certified) ++res.certified;

        SolveOptions opt;
        const double dt = opt.safety * stable_timestep(spec, grid);
        opt.dt = dt;
        const FieldTrajectory W = simulate(spec, grid, opt);
        double u0 = 0.0;
        for (double v : W.stamp_values(0)) u0 = std::max(u0, std::abs(v));
        const double tol = default_tolerance(grid, dt, u0);
        const PositivityReport pr = monitor(W, tol);
        res.worst_min = std::min(res.worst_min, pr.overall_min() / tol);
        if (pr.verdict == PositivityVerdict::nonnegative && cr.verdict == CertificateVerdict::certified) {
            ++res.nonnegative;
        } else {
            std::ostringstream os;
            os << "run " << run << ": certificate " << to_string(cr.verdict) << ", min " << pr.overall_min()
               << " (tol " << tol << ")";
            res.failures.push_back(os.str());
        }
    }
    return res;
}

}  // namespace poslab
