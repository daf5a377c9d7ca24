// Command-line front end: opengossip {simulate|analyze|bound|spectrum} [options]
//
// Settings are layered: preset, then --config file, then individual flags.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opengossip/cli/commands.hpp"
#include "opengossip/errors.hpp"

namespace {

using namespace opengossip;
using namespace opengossip::cli;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> threads;
    std::optional<std::size_t> chunk;
    std::optional<std::uint64_t> replications;
    std::optional<double> t_end;
    std::optional<std::size_t> grid_points;
    std::optional<int> n;
    std::optional<double> lambda_g, lambda_r, lambda_a, lambda_d, sigma2;
    std::optional<std::string> distribution;
    std::vector<std::string> policies;
    std::optional<double> burn_in;
    std::optional<int> j_max;
    std::vector<double> gammas;
};

void add_options(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON config file");
    app.add_option("--preset", f.preset, "Built-in experiment")->check(CLI::IsMember(preset_names()));
    app.add_option("--seed", f.seed, "Master seed");
    app.add_option("--out", f.out, "Output file (default: stdout)");
    app.add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", f.threads, "Worker threads (0 = all cores)");
    app.add_option("--chunk", f.chunk, "Replications per work unit");
    app.add_option("--replications", f.replications);
    app.add_option("--t-end", f.t_end);
    app.add_option("--grid-points", f.grid_points);
    app.add_option("--n", f.n, "Fixed size n, or n_init in open mode");
    app.add_option("--lambda-g", f.lambda_g);
    app.add_option("--lambda-r", f.lambda_r);
    app.add_option("--lambda-a", f.lambda_a);
    app.add_option("--lambda-d", f.lambda_d);
    app.add_option("--sigma2", f.sigma2);
    app.add_option("--distribution", f.distribution)->check(CLI::IsMember({"normal", "uniform"}));
    app.add_option("--policy", f.policies, "Departure policy (repeatable): random | min_abs");
    app.add_option("--burn-in", f.burn_in);
    app.add_option("--j-max", f.j_max);
    app.add_option("--gamma", f.gammas, "gamma values for the bound sweep (repeatable)");
}

ExperimentConfig build_config(const Flags& f) {
    ExperimentConfig c = f.preset ? preset(*f.preset) : ExperimentConfig{};
    if (f.config) c = load_config_file(*f.config, c);
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out_path = *f.out;
    if (f.format) c.format = parse_output_format(*f.format);
    if (f.threads) c.threads = *f.threads;
    if (f.chunk) c.chunk = *f.chunk;
    if (f.replications) c.replications = *f.replications;
    if (f.t_end) c.t_end = *f.t_end;
    if (f.grid_points) c.grid_points = *f.grid_points;
    if (f.n) c.n = *f.n;
    if (f.lambda_g) c.rates.lambda_g = *f.lambda_g;
    if (f.lambda_r) c.rates.lambda_r = *f.lambda_r;
    if (f.lambda_a) c.rates.lambda_a = *f.lambda_a;
    if (f.lambda_d) c.rates.lambda_d = *f.lambda_d;
    if (f.sigma2) c.rates.sigma2 = *f.sigma2;
    if (f.distribution) c.distribution = parse_distribution_family(*f.distribution);
    if (!f.policies.empty()) c.policies = f.policies;
    if (f.burn_in) c.burn_in = *f.burn_in;
    if (f.j_max) c.j_max = *f.j_max;
    if (!f.gammas.empty()) c.gamma_grid = f.gammas;
    return c;
}

const char* describe(const std::string& command) {
    if (command == "simulate") return "Monte Carlo ensembles or a single logged trajectory";
    if (command == "analyze") return "Exact moment dynamics, envelopes and stationary values";
    if (command == "bound") return "Asymptotic variance against the dual bounds over a gamma sweep";
    return "Eigenvalues of the fixed-size moment dynamics";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis of gossip averaging in open multi-agent systems"};
    app.require_subcommand(1);
    Flags flags;
    std::string command;
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name, describe(name));
        add_options(*sub, flags);
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ExperimentConfig config = build_config(flags);
        const CommandResult result = run_command(command, config);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
        const std::string text = render(result, command, config, config.format);
        if (config.out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(config.out_path, std::ios::binary);
            if (!out) throw ConfigError("cannot write '" + config.out_path + "'");
            out << text;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
