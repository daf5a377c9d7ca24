#pragma once

// Experiment configuration: the JSON schema read by the command-line tool,
// the built-in presets, and validation.
//
// Schema (all keys optional unless noted; unknown keys are rejected):
//
//   {
//     "mode": "fixed" | "open",                     required
//     "n": 50,                                      fixed mode size
//     "n_init": 5,                                  open mode initial size
//     "rates": {"lambda_g": 19, "lambda_r": 1,      fixed mode
//               "lambda_a": 5,  "lambda_d": 1},     open mode
//     "sigma2": 1.0,
//     "distribution": "normal" | "uniform",
//     "policies": ["random", "min_abs"],            departure selection
//     "t_end": 10.0,
//     "grid_points": 101,
//     "replications": 10000,
//     "seed": 1,
//     "burn_in": 20.0,                              bound command
//     "j_max": 40,                                  open analytics truncation
//     "gamma_grid": [1, 2, 5, 10, 20],              bound command
//     "log_events": false,                          single-trajectory output
//     "threads": 0,
//     "chunk": 64,
//     "output": {"path": "out.csv", "format": "csv" | "json"}
//   }

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opengossip/core.hpp"
#include "opengossip/engine.hpp"

namespace opengossip::cli {

enum class ModeKind { Fixed, Open };
enum class OutputFormat { Csv, Json };

std::string to_string(ModeKind mode);
std::string to_string(OutputFormat format);

struct ExperimentConfig {
    std::string preset = "custom";
    ModeKind mode = ModeKind::Fixed;
    /// Fixed size n, or the initial size in open mode.
    int n = 2;
    RatesConfig rates;
    DistributionFamily distribution = DistributionFamily::Normal;
    std::vector<std::string> policies{"random"};
    double t_end = 10.0;
    std::size_t grid_points = 101;
    std::uint64_t replications = 1000;
    std::uint64_t seed = 1;
    std::optional<double> burn_in;
    std::optional<int> j_max;
    std::vector<double> gamma_grid;
    bool log_events = false;
    unsigned threads = 0;
    std::size_t chunk = 64;
    std::string out_path;
    OutputFormat format = OutputFormat::Csv;

    /// Throws ConfigError with a diagnostic naming the offending field.
    void validate() const;

    SimulationSpec simulation_spec(const std::string& policy) const;
    std::vector<double> grid() const;

    /// Canonical JSON of everything that affects results (threads and output
    /// settings excluded).
    nlohmann::json canonical_json() const;
    /// FNV-1a 64 of canonical_json().dump(), as 16 hex digits.
    std::string hash() const;
};

/// Parses a config document; ConfigError on unknown keys or bad types.
/// Fields absent from the document keep their value in `base`.
ExperimentConfig parse_config(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

std::vector<std::string> preset_names();
/// ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

OutputFormat parse_output_format(const std::string& name);

}  // namespace opengossip::cli
