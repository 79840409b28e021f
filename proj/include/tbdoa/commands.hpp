// Batch front-end commands behind the CLI: every command is deterministic
// given (config, seed) and writes schema-stable CSV with a header row.
#pragma once

#include <cstdint>
#include <string>

#include "tbdoa/config.hpp"

namespace tbdoa {

struct CliOptions {
    std::uint64_t seed = 0;
    std::string out_dir;  // overrides config when non-empty
    int jobs = 1;
};

// Each returns a process exit code: 0 iff all audits pass.
int cmd_design(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_beampattern(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_simulate(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_estimate(const ExperimentConfig& cfg, const CliOptions& opts,
                 const std::string& snapshot_path);
int cmd_crb(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_bias(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_lut(const ExperimentConfig& cfg, const CliOptions& opts);
int cmd_montecarlo(const ExperimentConfig& cfg, const CliOptions& opts);

}  // namespace tbdoa
