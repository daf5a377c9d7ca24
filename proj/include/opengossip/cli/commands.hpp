#pragma once

// The four subcommands. Each takes a validated configuration and returns
// figure-ready tables; none of them has preset-specific code paths.

#include <string>
#include <vector>

#include "opengossip/cli/config.hpp"
#include "opengossip/cli/table.hpp"

namespace opengossip::cli {

inline constexpr const char* kToolName = "opengossip";
inline constexpr const char* kToolVersion = "0.1.0";

struct CommandResult {
    std::vector<ResultTable> tables;
    std::vector<std::string> warnings;

    const ResultTable& table(const std::string& name) const;
};

/// Monte Carlo ensembles (or a single logged trajectory when log_events).
CommandResult cmd_simulate(const ExperimentConfig& config);
/// Exact ODE trajectories, envelopes, fixed point / stationary quantities.
CommandResult cmd_analyze(const ExperimentConfig& config);
/// Per gamma: simulated asymptotic variance next to the LP and explicit bounds.
CommandResult cmd_bound(const ExperimentConfig& config);
/// Eigen-analysis of the fixed-size dynamics.
CommandResult cmd_spectrum(const ExperimentConfig& config);

std::vector<std::string> command_names();
/// Validates the config, then dispatches. ConfigError for an unknown name.
CommandResult run_command(const std::string& name, const ExperimentConfig& config);

/// Serializes the result; metadata lines carry tool, command, preset,
/// config hash and seed.
std::string render(const CommandResult& result, const std::string& command, const ExperimentConfig& config,
                   OutputFormat format);

}  // namespace opengossip::cli
