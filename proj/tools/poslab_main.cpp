#include "poslab/errors.hpp"
#include "poslab/scenario.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <iomanip>
#include <iostream>

using namespace poslab;

namespace {

void print_outcome(const RunOutcome& r) {
    std::cout << std::left << std::setw(24) << r.scenario << " exit " << r.exit_code;
    if (!r.certificate_verdict.empty()) std::cout << "  certificate " << r.certificate_verdict;
    if (!r.positivity_verdict.empty()) std::cout << "  positivity " << r.positivity_verdict;
    std::cout << '\n';
    if (!r.message.empty()) std::cout << "    " << r.message << '\n';
}

int describe(const std::string& name) {
    const Scenario& sc = find_scenario(name);
    std::cout << sc.name << "\n  " << sc.summary << "\n"
              << "  kind: " << to_string(sc.kind) << "\n"
              << "  nx: " << sc.nx << "\n"
              << "  T: " << sc.horizon << "\n"
              << "  expected certificate: " << to_string(sc.expected_certificate) << "\n"
              << "  expected positivity: " << to_string(sc.expected_positivity) << "\n";
    if (sc.reference) std::cout << "  analytic reference: " << sc.reference->formula << "\n";
    if (sc.certificate) {
        YAML::Emitter em;
        em << to_yaml(*sc.certificate);
        std::cout << "  certificate:\n";
        std::string line;
        std::istringstream is(em.c_str());
        while (std::getline(is, line)) std::cout << "    " << line << '\n';
    }
    for (const auto& w : sc.weights) std::cout << "  weight: " << w.id << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positivity experiments for parabolic systems"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::optional<int> nx;
    std::optional<double> dt, T, tol;

    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("scenario", cfg.scenario, "Scenario name");
    run->add_option("--config", config_path, "YAML run config");
    run->add_option("--nx", nx, "Nodes per axis");
    run->add_option("--dt", dt, "Time step");
    run->add_option("--T", T, "Horizon");
    run->add_option("--out", cfg.output_dir, "Output directory");
    run->add_option("--tol", tol, "Positivity tolerance");
    run->add_option("--seed", cfg.seed, "Seed for randomized scenarios");

    std::vector<std::string> names;
    bool all = false;
    int jobs = 1;
    std::string suite_out;
    auto* suite = app.add_subcommand("suite", "Run several scenarios");
    suite->add_option("names", names, "Scenario names");
    suite->add_flag("--all", all, "Run the whole registry");
    suite->add_option("--jobs", jobs, "Worker count")->check(CLI::PositiveNumber);
    suite->add_option("--out", suite_out, "Output root");

    app.add_subcommand("list", "List registered scenarios");
    std::string describe_name;
    auto* desc = app.add_subcommand("describe", "Show a scenario");
    desc->add_option("scenario", describe_name, "Scenario name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_code::numerical_failure;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& sc : registry()) std::cout << std::left << std::setw(24) << sc.name << sc.summary << '\n';
            return 0;
        }
        if (app.got_subcommand("describe")) return describe(describe_name);
        if (app.got_subcommand("run")) {
            if (!config_path.empty()) {
                RunConfig file = load_run_config(config_path);
                if (cfg.scenario.empty()) cfg.scenario = file.scenario;
                if (cfg.output_dir.empty()) cfg.output_dir = file.output_dir;
                if (run->count("--seed") == 0) cfg.seed = file.seed;
                cfg.nx = file.nx;
                cfg.dt = file.dt;
                cfg.T = file.T;
                cfg.tol = file.tol;
                cfg.levels = file.levels;
            }
            if (nx) cfg.nx = nx;
            if (dt) cfg.dt = dt;
            if (T) cfg.T = T;
            if (tol) cfg.tol = tol;
            if (cfg.scenario.empty()) throw LabError(ErrorKind::config, "no scenario given");
            const RunOutcome r = run_scenario(cfg);
            print_outcome(r);
            std::cout << "artifacts: " << r.output_dir << '\n';
            return r.exit_code;
        }
        if (app.got_subcommand("suite")) {
            if (all)
                for (const auto& sc : registry()) names.push_back(sc.name);
            RunConfig base;
            base.output_dir = suite_out;
            const SuiteOutcome s = run_suite(names, base, jobs);
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& r : s.runs) print_outcome(r);
            return s.exit_code;
        }
    } catch (const LabError& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.detail() << '\n';
        return exit_code::numerical_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::numerical_failure;
    }
    return 0;
}
