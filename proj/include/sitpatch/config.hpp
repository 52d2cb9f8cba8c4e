#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sitpatch/continuation.hpp"
#include "sitpatch/integrate.hpp"
#include "sitpatch/model.hpp"

// Scenario configuration: JSON in, validated config out. Parameter fields
// default to the published Aedes albopictus table when omitted.

namespace sit {

struct GridSpec {
    double min = 0, max = 0;
    std::size_t count = 0;
    bool log_spacing = false;

    std::vector<double> values() const;
};

struct ScenarioConfig {
    std::string experiment;  // may be empty until run() validates it
    ModelParams params;
    ReleaseSchedule schedule = ConstantRelease{0.0};
    std::vector<SystemState> initial_sets;
    IntegrationOptions sim;
    std::filesystem::path output_dir = "out";
    int threads = 0;  // 0 = hardware concurrency

    // equilibria / compare
    double lambda = 0.0;
    // bifurcation
    double lambda_start = 0.1, lambda_end = 500.0;
    ContinuationOptions continuation;
    std::string branch = "stable";  // stable | unstable | both
    // critical
    std::string schedule_kind = "constant";  // constant | periodic
    double period = 10.0;
    double bracket_lo = 1.0, bracket_hi = 500.0;
    double tol = 0.5;
    // heatmap / ratio sweep
    GridSpec d12_grid{0.05, 2.0, 16, true};
    GridSpec d21_grid{0.05, 2.0, 16, true};
    std::string method = "fold";  // fold | bisection
    double d12_fixed = 0.6;
    GridSpec eta_grid{0.5, 2.0, 31, false};
    // audit: coordinate names and multiplicative factors
    std::vector<std::pair<std::string, double>> perturbations;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Parses and validates a scenario file. Schema and invariant violations
// raise ConfigError naming the offending field.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const nlohmann::json& j);

// Normalized serialization; load(parse(dump(c))) is the identity.
nlohmann::json to_json(const ScenarioConfig& c);

const std::vector<std::string>& known_experiments();

}  // namespace sit
