#include "poslab/errors.hpp"
#include "poslab/pde_lab.hpp"
#include "poslab/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace poslab {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

Json point_json(const Point& x, int dim) {
    Json p = Json::array();
    for (int k = 0; k < dim; ++k) p.push_back(x[k]);
    return p;
}

Json positivity_json(const PositivityReport& r, int dim) {
    Json j;
    j["verdict"] = to_string(r.verdict);
    j["tol"] = r.tol;
    j["component_min"] = r.component_min;
    j["component_min_time"] = r.component_min_time;
    if (r.violation) {
        j["t_neg"] = r.violation->time;
        j["violation"] = {{"component", r.violation->component + 1},
                          {"location", point_json(r.violation->location, dim)},
                          {"value", r.violation->value}};
    } else {
        j["t_neg"] = nullptr;
    }
    j["max_energy"] = r.energy.empty() ? 0.0 : *std::max_element(r.energy.begin(), r.energy.end());
    j["gronwall_ratio"] = r.gronwall_ratio ? number(*r.gronwall_ratio) : Json(nullptr);
    if (r.transformed) {
        j["inverse_window"] = number(r.inverse_window);
        j["source_min_in_window"] = r.source_min_in_window ? Json(*r.source_min_in_window) : Json(nullptr);
    }
    return j;
}

Json certificate_json(const TransformCertificate& cert, const CertificateReport& cr, CertificateVerdict expected) {
    Json j;
    j["kind"] = to_string(cert.kind());
    j["description"] = cert.description();
    j["verdict"] = to_string(cr.verdict);
    j["expected"] = to_string(expected);
    j["max_offdiag_a"] = cr.max_offdiag_a;
    j["max_offdiag_b"] = cr.max_offdiag_b;
    j["max_offdiag_dj"] = cr.max_offdiag_dj;
    j["min_offdiag_ghat"] = number(cr.min_offdiag_ghat);
    j["tol_diag"] = cr.tol_diag;
    j["tol_sign"] = cr.tol_sign;
    j["t_valid"] = number(cert.t_valid());
    j["t_pos"] = number(cert.t_pos());
    Json ric = Json::array();
    for (const auto& s : cert.riccati()) {
        Json r;
        r["kind"] = s.kind == RiccatiKind::nilpotent ? "nilpotent" : "idempotent";
        r["classification"] = to_string(s.classification);
        r["initial"] = s.values.empty() ? 0.0 : s.values.front();
        r["final"] = s.values.empty() ? 0.0 : s.values.back();
        r["valid_until"] = s.valid_until();
        r["blow_up_time"] = number(s.blow_up_time);
        r["sign_exit_time"] = number(s.sign_exit_time);
        r["discriminant"] = s.discriminant;
        if (s.roots) r["roots"] = {s.roots->first, s.roots->second};
        r["closed_form_used"] = s.closed_form_used;
        if (s.closed_form_used) r["closed_form_discrepancy"] = s.closed_form_discrepancy;
        ric.push_back(r);
    }
    j["riccati"] = ric;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LabError(ErrorKind::config, "cannot write '" + path.string() + "'");
    out << text;
}

template <class F>
void write_with(const fs::path& path, F&& fn) {
    std::ostringstream os;
    fn(os);
    write_text(path, os.str());
}

double max_abs_values(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Context {
    const Scenario& sc;
    const RunConfig& cfg;
    fs::path out;
    Json& report;
    RunOutcome& outcome;

    void fail(int code, const std::string& msg) {
        if (outcome.exit_code == exit_code::ok) {
            outcome.exit_code = code;
            outcome.message = msg;
        }
        report["failures"].push_back(msg);
    }
};

void run_standard(Context& c) {
    const double T = c.cfg.T.value_or(c.sc.horizon);
    const int nx = c.cfg.nx.value_or(c.sc.nx);
    const SystemSpec spec = c.sc.build(T);
    check_shapes(spec);
    const Grid grid = discretize(spec.domain, nx);
    const auto samples = sample_points(spec.domain, 9);
    validate_system(spec, samples);

    const TransformCertificate cert = c.sc.certificate ? build_certificate(*c.sc.certificate, spec.g, spec.m, T)
                                                       : identity_certificate(spec.m);
    std::vector<double> times;
    const double t_check = std::min(T, cert.t_valid());
    for (int i = 0; i <= 32; ++i) times.push_back(t_check * i / 32.0);
    const CertificateReport cr = check_certificate(cert, spec, samples, times);
    c.report["certificate"] = certificate_json(cert, cr, c.sc.expected_certificate);
    c.outcome.certificate_verdict = to_string(cr.verdict);
    if (cr.verdict != c.sc.expected_certificate)
        c.fail(exit_code::certificate_mismatch,
               "certificate verdict " + to_string(cr.verdict) + ", expected " + to_string(c.sc.expected_certificate));
    const bool certified = cr.verdict == CertificateVerdict::certified;
    const bool transformed = c.sc.certificate.has_value() && certified;

    std::optional<TransformedSystem> ts;
    if (transformed) ts = transform_system(spec, cert);

    SolveOptions opt;
    double dt = c.cfg.dt.value_or(0.0);
    if (dt <= 0.0) {
        double limit = stable_timestep(spec, grid);
        if (ts) limit = std::min(limit, stable_timestep(ts->system, grid));
        dt = std::isfinite(limit) ? opt.safety * limit : T / 100.0;
    }
    opt.dt = dt;

    const FieldTrajectory W = simulate(spec, grid, opt);
    const double tol = c.cfg.tol.value_or(default_tolerance(grid, dt, max_abs_values(W.stamp_values(0))));
    const PositivityReport pr = monitor(W, tol);
    c.report["parameters"] = {{"nx", nx}, {"dt", dt}, {"T", T}, {"tol", tol}, {"stamps", W.stamps()}};
    c.report["positivity"] = positivity_json(pr, grid.dimension());
    c.report["positivity"]["expected"] = to_string(c.sc.expected_positivity);
    c.outcome.positivity_verdict = to_string(pr.verdict);

    write_with(c.out / "fields.csv", [&](std::ostream& os) { W.write_csv(os); });
    write_with(c.out / "energy.csv", [&](std::ostream& os) { write_energy_csv(os, pr); });

    if (c.sc.expected_positivity == ExpectedPositivity::nonnegative && pr.verdict == PositivityVerdict::violated)
        c.fail(exit_code::positivity_mismatch, "positivity violated where nonnegativity was expected");
    if (c.sc.expected_positivity == ExpectedPositivity::violated && pr.verdict == PositivityVerdict::nonnegative)
        c.fail(exit_code::positivity_mismatch, "expected sign change was not observed");
    if (certified && !transformed && pr.verdict == PositivityVerdict::violated)
        c.fail(exit_code::positivity_mismatch, "positivity violated for a certified system");

    if (transformed) {
        const FieldTrajectory v = solve_transformed(*ts, grid, opt);
        const double gap = transform_gap(W, v, cert);
        const double tol_v = c.cfg.tol.value_or(default_tolerance(grid, dt, max_abs_values(v.stamp_values(0))));
        const PositivityReport tr = transformed_monitor(W, cert, tol_v);
        Json t = positivity_json(tr, grid.dimension());
        t["transform_gap"] = gap;
        c.report["transformed"] = t;
        write_with(c.out / "transformed_fields.csv", [&](std::ostream& os) { v.write_csv(os); });
        if (tr.verdict == PositivityVerdict::violated)
            c.fail(exit_code::positivity_mismatch, "J W violated nonnegativity for a certified system");
        if (tr.source_min_in_window && *tr.source_min_in_window < -tol)
            c.fail(exit_code::positivity_mismatch, "W negative inside the inverse-positivity window");
    }

    if (c.sc.reference) {
        double err = 0.0;
        for (std::size_t s = 0; s < W.stamps(); ++s)
            for (std::size_t p = 0; p < grid.size(); ++p) {
                const Vector ref = c.sc.reference->W(grid.point(p), W.time(s));
                for (int k = 0; k < spec.m; ++k) err = std::max(err, std::abs(W.value(s, p, k) - ref(k)));
            }
        c.report["reference"] = {{"formula", c.sc.reference->formula},
                                 {"max_error", err},
                                 {"tolerance", c.sc.reference->tolerance}};
        if (err > c.sc.reference->tolerance) c.fail(exit_code::numerical_failure, "analytic reference not reproduced");
    }
}

void run_transfer(Context& c) {
    const double T = c.cfg.T.value_or(c.sc.horizon);
    const int nx = c.cfg.nx.value_or(c.sc.nx);
    const SystemSpec spec = c.sc.build(T);
    check_shapes(spec);
    const Grid grid = discretize(spec.domain, nx);
    validate_system(spec, sample_points(spec.domain, 9));

    TransferOptions opt;
    if (!c.cfg.levels.empty()) opt.levels = c.cfg.levels;
    if (c.cfg.dt) opt.forward.dt = *c.cfg.dt;
    if (c.cfg.tol) opt.tol = *c.cfg.tol;
    const TransferReport rep = positivity_transfer_experiment(spec, grid, c.sc.weights, opt);

    const FieldTrajectory u = simulate(spec, grid, opt.forward);
    const PositivityReport pr = monitor(u, rep.tol);
    c.report["parameters"] = {{"nx", nx}, {"T", T}, {"tol", rep.tol}, {"sigma", rep.sigma}, {"q0", rep.q0},
                              {"levels", opt.levels}};
    c.report["positivity"] = positivity_json(pr, grid.dimension());
    c.report["positivity"]["expected"] = to_string(c.sc.expected_positivity);
    c.outcome.positivity_verdict = to_string(pr.verdict);

    Json cells = Json::array();
    for (const auto& cell : rep.cells) {
        cells.push_back({{"psi_id", cell.psi_id},
                         {"n", cell.level},
                         {"forward_pairing", cell.forward_pairing},
                         {"dual_pairing", cell.dual_pairing},
                         {"gap", cell.gap},
                         {"sup_l2", cell.norms.sup_l2},
                         {"grad_l2", cell.norms.grad_l2},
                         {"l_sigma", cell.norms.l_sigma},
                         {"dual_min", cell.dual_min},
                         {"dual_certified", cell.dual_certified},
                         {"dual_nonnegative", cell.dual_nonnegative},
                         {"coefficient_norm", cell.coefficient_norm}});
        if (cell.dual_certified && !cell.dual_nonnegative)
            c.fail(exit_code::positivity_mismatch, "certified dual for " + cell.psi_id + " went negative");
        if (c.sc.expected_positivity == ExpectedPositivity::nonnegative && cell.min_pairing < -rep.tol)
            c.fail(exit_code::positivity_mismatch, "negative pairing for " + cell.psi_id);
    }
    c.report["transfer"] = cells;

    write_with(c.out / "fields.csv", [&](std::ostream& os) { u.write_csv(os); });
    write_with(c.out / "energy.csv", [&](std::ostream& os) { write_energy_csv(os, pr); });
    write_with(c.out / "transfer.csv", [&](std::ostream& os) { write_transfer_csv(os, rep); });

    if (c.sc.expected_positivity == ExpectedPositivity::nonnegative && pr.verdict == PositivityVerdict::violated)
        c.fail(exit_code::positivity_mismatch, "forward solution violated nonnegativity");
}

void run_sweep(Context& c) {
    const double T = c.cfg.T.value_or(c.sc.horizon);
    const int nx = c.cfg.nx.value_or(c.sc.nx);
    const SweepResult res = certificate_sweep(c.cfg.seed, c.sc.sweep_count, nx, T);
    c.report["parameters"] = {{"nx", nx}, {"T", T}, {"seed", c.cfg.seed}, {"count", c.sc.sweep_count}};
    c.report["sweep"] = {{"runs", res.runs},
                         {"certified", res.certified},
                         {"nonnegative", res.nonnegative},
                         {"worst_min_over_tol", number(res.worst_min)},
                         {"failures", res.failures}};
    c.outcome.certificate_verdict = res.certified == res.runs ? "certified" : "mixed";
    c.outcome.positivity_verdict = res.nonnegative == res.runs ? "nonnegative" : "violated";
    if (!res.failures.empty())
        c.fail(exit_code::positivity_mismatch, std::to_string(res.failures.size()) + " sweep runs failed");
}

}  // namespace

RunOutcome run_scenario(const RunConfig& config) {
    RunOutcome outcome;
    outcome.scenario = config.scenario;
    Json report;
    report["schema"] = "poslab-report v1";
    report["scenario"] = config.scenario;
    report["failures"] = Json::array();

    fs::path out = config.output_dir.empty() ? fs::path(default_output_dir()) / config.scenario
                                             : fs::path(config.output_dir);
    outcome.output_dir = out.string();
    try {
        fs::create_directories(out);
    } catch (const fs::filesystem_error& e) {
        outcome.exit_code = exit_code::numerical_failure;
        outcome.message = std::string("cannot create output directory: ") + e.what();
        return outcome;
    }

    try {
        const Scenario& sc = find_scenario(config.scenario);
        report["summary"] = sc.summary;
        report["kind"] = to_string(sc.kind);
        Context ctx{sc, config, out, report, outcome};
        switch (sc.kind) {
            case ScenarioKind::standard: run_standard(ctx); break;
            case ScenarioKind::transfer: run_transfer(ctx); break;
            case ScenarioKind::sweep: run_sweep(ctx); break;
        }
    } catch (const LabError& e) {
        outcome.exit_code = exit_code::numerical_failure;
        outcome.message = std::string(to_string(e.kind())) + ": " + e.detail();
        report["error"] = {{"kind", std::string(to_string(e.kind()))}, {"detail", e.detail()}};
    } catch (const std::exception& e) {
        outcome.exit_code = exit_code::numerical_failure;
        outcome.message = e.what();
        report["error"] = {{"kind", "internal"}, {"detail", e.what()}};
    }
    report["exit_code"] = outcome.exit_code;

    try {
        write_text(out / "report.json", report.dump(2) + "\n");
    } catch (const LabError& e) {
        if (outcome.exit_code == exit_code::ok) {
            outcome.exit_code = exit_code::numerical_failure;
            outcome.message = e.detail();
        }
    }
    return outcome;
}

SuiteOutcome run_suite(const std::vector<std::string>& names, const RunConfig& base, int jobs) {
    SuiteOutcome suite;
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (seen.insert(n).second)
            unique.push_back(n);
        else
            suite.warnings.push_back("duplicate scenario '" + n + "' ignored");
    }
    const fs::path root = base.output_dir.empty() ? fs::path(default_output_dir()) : fs::path(base.output_dir);
    suite.runs.resize(unique.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < unique.size(); i = next++) {
            RunConfig cfg = base;
            cfg.scenario = unique[i];
            cfg.output_dir = (root / unique[i]).string();
            suite.runs[i] = run_scenario(cfg);
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(unique.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& r : suite.runs)
        if (r.exit_code != exit_code::ok) {
            suite.exit_code = r.exit_code;
            break;
        }

    fs::create_directories(root);
    write_with(root / "suite.csv", [&](std::ostream& os) {
        os << kCsvSchema << " suite\n";
        os << "scenario,exit_code,certificate,positivity\n";
        for (const auto& r : suite.runs)
            os << r.scenario << ',' << r.exit_code << ',' << r.certificate_verdict << ',' << r.positivity_verdict
               << '\n';
    });
    return suite;
}

}  // namespace poslab
