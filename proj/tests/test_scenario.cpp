#include "poslab/errors.hpp"
#include "poslab/scenario.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

using namespace poslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("poslab-test-" + name);
    fs::remove_all(p);
    return p;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("registry holds distinct, buildable scenarios") {
    const auto& reg = registry();
    CHECK(reg.size() >= 10);
    std::set<std::string> names;
    for (const auto& s : reg) {
        INFO(s.name);
        CHECK(names.insert(s.name).second);
        CHECK_FALSE(s.summary.empty());
        if (s.kind == ScenarioKind::sweep) {
            CHECK(s.sweep_count > 0);
            continue;
        }
        const SystemSpec spec = s.build(s.horizon);
        CHECK_NOTHROW(check_shapes(spec));
        CHECK(spec.horizon == s.horizon);
    }
    for (const char* required : {"ctrex-growing", "ctrex-decaying", "ex-nilpotent-b", "ex-idempotent-c",
                                 "ex-compose-bc", "dual-quasilinear", "sweep-certified"})
        CHECK(names.count(required) == 1);
}

TEST_CASE("unknown scenario lists the registered names") {
    try {
        find_scenario("ctrex-nope");
        FAIL("expected unknown-scenario");
    } catch (const LabError& e) {
        CHECK(e.kind() == ErrorKind::unknown_scenario);
        CHECK(e.detail().find("ctrex-growing") != std::string::npos);
    }
    CHECK(find_scenario("ex-ex1").name == "ex-ex1");
}

TEST_CASE("run config parsing") {
    const RunConfig c = run_config_from_yaml(
        "scenario: ex-ex1\noutput: out/x\nseed: 7\ngrid:\n  nx: 33\ntime:\n  dt: 0.001\n  T: 0.5\n"
        "tolerances:\n  positivity: 1e-3\nmollification:\n  levels: [2, 4]\n");
    CHECK(c.scenario == "ex-ex1");
    CHECK(c.output_dir == "out/x");
    CHECK(c.seed == 7);
    CHECK(c.nx == 33);
    CHECK(c.dt == 0.001);
    CHECK(c.T == 0.5);
    CHECK(c.tol == 1e-3);
    CHECK(c.levels == std::vector<int>{2, 4});
    CHECK_FALSE(run_config_from_yaml("").nx);

    for (const char* bad : {"grid: [nx: 1", "scenrio: x", "grid:\n  nx: two\n", "grid:\n  nx: 2\n",
                            "time:\n  T: -1\n", "time:\n  dt: 0\n", "mollification:\n  levels: [0]\n",
                            "tolerances:\n  positivity: -1\n"}) {
        INFO(bad);
        try {
            run_config_from_yaml(bad);
            FAIL("expected a config error");
        } catch (const LabError& e) {
            CHECK(e.kind() == ErrorKind::config);
        }
    }
    CHECK_THROWS_AS(load_run_config("/nonexistent/poslab.yaml"), LabError);
}

TEST_CASE("default output directory follows the environment") {
    ::setenv("POSLAB_OUTPUT_DIR", "/tmp/poslab-env-out", 1);
    CHECK(default_output_dir() == "/tmp/poslab-env-out");
    ::unsetenv("POSLAB_OUTPUT_DIR");
    CHECK(default_output_dir() == "poslab-out");
}

TEST_CASE("a small run writes every artifact") {
    const fs::path out = scratch("run");
    RunConfig cfg;
    cfg.scenario = "ex-nilpotent-b";
    cfg.nx = 17;
    cfg.T = 0.5;
    cfg.output_dir = out.string();
    const RunOutcome r = run_scenario(cfg);
    CHECK(r.exit_code == exit_code::ok);
    CHECK(r.certificate_verdict == "certified");
    CHECK(r.positivity_verdict == "nonnegative");
    for (const char* f : {"fields.csv", "energy.csv", "transformed_fields.csv", "report.json"})
        CHECK(fs::exists(out / f));
    CHECK(first_line(out / "fields.csv").rfind("# poslab-csv v1", 0) == 0);
    std::ifstream in(out / "report.json");
    const auto report = nlohmann::json::parse(in);
    CHECK(report["scenario"] == "ex-nilpotent-b");
    CHECK(report["exit_code"] == 0);
    fs::remove_all(out);
}

TEST_CASE("failures map onto exit codes without throwing") {
    const fs::path out = scratch("fail");
    RunConfig cfg;
    cfg.scenario = "ctrex-growing";
    cfg.nx = 17;
    cfg.dt = 10.0;
    cfg.output_dir = out.string();
    CHECK(run_scenario(cfg).exit_code == exit_code::numerical_failure);
    cfg.scenario = "unknown";
    cfg.dt.reset();
    CHECK(run_scenario(cfg).exit_code == exit_code::numerical_failure);
    fs::remove_all(out);
}

TEST_CASE("suite: empty list and duplicate names") {
    const fs::path out = scratch("suite");
    RunConfig base;
    base.output_dir = out.string();
    const SuiteOutcome empty = run_suite({}, base, 2);
    CHECK(empty.exit_code == exit_code::ok);
    CHECK(empty.runs.empty());
    CHECK(fs::exists(out / "suite.csv"));

    base.nx = 17;
    base.T = 0.3;
    const SuiteOutcome dup = run_suite({"ex-idempotent-c", "ex-idempotent-c"}, base, 2);
    CHECK(dup.runs.size() == 1);
    CHECK(dup.warnings.size() == 1);
    CHECK(dup.exit_code == exit_code::ok);
    CHECK(fs::exists(out / "ex-idempotent-c" / "report.json"));
    fs::remove_all(out);
}

TEST_CASE("certificate sweep on a few systems") {
    const SweepResult r = certificate_sweep(3, 5, 17, 0.3);
    CHECK(r.runs == 5);
    CHECK(r.certified == 5);
    CHECK(r.nonnegative == 5);
    CHECK(r.failures.empty());
}
