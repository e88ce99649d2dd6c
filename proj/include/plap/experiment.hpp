#pragma once

// Batch experiments behind the command-line tool: one CSV (fixed header per
// command) and one JSON summary per run.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace plap::experiment {

struct ExperimentSpec {
    std::string command;  // kappa | identity | sharpness | ellipsoid | orlicz | solve | local
    nlohmann::json params = nlohmann::json::object();
    std::string output_dir = ".";
    std::uint64_t seed = 0;
};

struct RunResult {
    int rows = 0;
    int failures = 0;
    std::vector<std::string> files;
    nlohmann::json summary;
};

const std::vector<std::string>& commands();

/// Parses a config file body. Accepts either the params block itself or
/// {"command": .., "params": {..}, "seed": ..}. ConfigError carries the line
/// and column of JSON syntax errors or the offending field path.
ExperimentSpec parse_spec(const std::string& command, const std::string& text);

/// Runs the experiment and writes <output_dir>/<command>*.csv and
/// <output_dir>/<command>.json. Throws ConfigError for schema problems.
RunResult run(const ExperimentSpec& spec);

}  // namespace plap::experiment
