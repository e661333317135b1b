#pragma once

#include "poslab/certificate_spec.hpp"
#include "poslab/duality.hpp"
#include "poslab/monitor.hpp"
#include "poslab/system_model.hpp"
#include "poslab/transform.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace poslab {

enum class ExpectedPositivity { nonnegative, violated, any };

std::string to_string(ExpectedPositivity e);

enum class ScenarioKind {
    standard,  ///< simulate, optional transformed solve, monitor
    transfer,  ///< positivity-transfer experiment through the dual system
    sweep,     ///< randomized certified systems
};

std::string to_string(ScenarioKind k);

struct AnalyticReference {
    std::function<Vector(const Point&, double)> W;
    double tolerance = 0.02;  ///< max nodal error over stored stamps
    std::string formula;
};

struct Scenario {
    std::string name;
    std::string summary;
    ScenarioKind kind = ScenarioKind::standard;
    std::function<SystemSpec(double horizon)> build;
    std::optional<CertificateSpec> certificate;  ///< identity check when absent
    int nx = 65;
    double horizon = 1.0;
    CertificateVerdict expected_certificate = CertificateVerdict::certified;
    ExpectedPositivity expected_positivity = ExpectedPositivity::any;
    std::optional<AnalyticReference> reference;
    std::vector<WeightFunction> weights;  ///< transfer scenarios
    int sweep_count = 0;                  ///< sweep scenarios
};

const std::vector<Scenario>& registry();

/// Throws unknown-scenario listing the registered names.
const Scenario& find_scenario(const std::string& name);

struct RunConfig {
    std::string scenario;
    std::optional<int> nx;
    std::optional<double> dt;
    std::optional<double> T;
    std::optional<double> tol;
    std::vector<int> levels;  ///< mollification levels; empty means the default
    std::string output_dir;
    std::uint64_t seed = 1;
};

/// Reads a YAML run config. Unknown keys and malformed values throw config errors.
RunConfig run_config_from_yaml(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Output directory used when none is given: $POSLAB_OUTPUT_DIR or "poslab-out".
std::string default_output_dir();

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int certificate_mismatch = 2;
inline constexpr int positivity_mismatch = 3;
inline constexpr int numerical_failure = 4;
}  // namespace exit_code

struct RunOutcome {
    std::string scenario;
    int exit_code = exit_code::ok;
    std::string certificate_verdict;  ///< empty when not evaluated
    std::string positivity_verdict;
    std::string message;              ///< first failure, if any
    std::string output_dir;
};

/// Executes a scenario and writes fields.csv, energy.csv and report.json
/// (plus transformed_fields.csv or transfer.csv where relevant) to
/// config.output_dir. Never throws; failures map onto the exit code.
RunOutcome run_scenario(const RunConfig& config);

struct SuiteOutcome {
    int exit_code = exit_code::ok;  ///< first non-zero code in list order
    std::vector<RunOutcome> runs;
    std::vector<std::string> warnings;
};

/// Runs each distinct name into base.output_dir/<name> with up to `jobs`
/// workers and writes suite.csv there. Overrides in `base` apply to every run.
SuiteOutcome run_suite(const std::vector<std::string>& names, const RunConfig& base, int jobs);

struct SweepResult {
    int runs = 0;
    int certified = 0;
    int nonnegative = 0;
    double worst_min = kInfinity;  ///< most negative value seen, relative to its run's tol
    std::vector<std::string> failures;
};

/// Random 2x2 systems with diagonal a in [0.5, 2], off-diagonal g >= 0 and
/// nonnegative bump data on (0,pi)^2, each monitored with the default tolerance.
SweepResult certificate_sweep(std::uint64_t seed, int count, int nx, double horizon);

}  // namespace poslab
