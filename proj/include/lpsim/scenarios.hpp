#pragma once

// Built-in experiments driven by a Config. Each run writes data CSVs and a
// plain-text invariant report into the output directory.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lpsim/config.hpp"

namespace lpsim {

struct ScenarioInfo {
    std::string name;
    std::string description;
};

const std::vector<ScenarioInfo>& scenario_registry();
/// One "name  description" line per scenario, in registry order.
std::string scenario_listing();

struct RunOptions {
    std::optional<std::string> out_dir;         // overrides output.dir
    std::optional<unsigned long long> seed;     // overrides seed
    double tolerance_scale = 1.0;               // multiplies every tolerance-type bound
};

struct InvariantCheck {
    std::string name;
    double measured;
    std::string relation;  // "<=", ">=", "<", ">", "=="
    double bound;
    bool passed;
};

struct ScenarioReport {
    std::string scenario;
    unsigned long long seed = 0;
    double tolerance_scale = 1.0;
    std::string out_dir;
    std::vector<InvariantCheck> checks;
    std::vector<std::string> files;  // written artifacts, report last

    bool passed() const;
    std::string text() const;
};

/// Validates the config for its scenario (ConfigError on any problem),
/// runs it, writes the artifacts and returns the report.
ScenarioReport run_scenario(const Config& cfg, const RunOptions& opts);

/// Exit status: 0 pass, 1 invariant failure or other error, 2 config error,
/// 3 numerical convergence error. Diagnostics go to err, the report to out.
int run_config_file(const std::string& path, const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace lpsim
