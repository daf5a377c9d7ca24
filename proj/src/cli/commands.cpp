#include "opengossip/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opengossip/errors.hpp"
#include "opengossip/fixed_analytics.hpp"
#include "opengossip/open_analytics.hpp"
#include "opengossip/random.hpp"

namespace opengossip::cli {

namespace {

using I64 = std::int64_t;

ResultTable make_table(std::string name, std::vector<std::string> columns) {
    ResultTable t;
    t.name = std::move(name);
    t.columns = std::move(columns);
    return t;
}

// Two-column quantity/value listing.
struct Summary {
    ResultTable table = make_table("summary", {"quantity", "value"});

    void add(const std::string& q, Cell v) { table.add_row({q, std::move(v)}); }
};

ParallelOptions parallel_of(const ExperimentConfig& c) { return {c.threads, c.chunk}; }

std::string join_ids(const std::vector<AgentId>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(ids[i].value);
    }
    return s;
}

void simulate_single(const ExperimentConfig& c, CommandResult& out) {
    const auto grid = c.grid();
    std::vector<Trajectory> runs;
    std::size_t slots = 0;
    for (const auto& p : c.policies) {
        runs.push_back(
            run_trajectory(c.simulation_spec(p), c.t_end, grid, c.seed, 0, {.log_events = true, .snapshot_values = true}));
        for (const auto& r : runs.back().records) slots = std::max(slots, r.agents.size());
    }

    std::vector<std::string> cols{"policy", "t", "n", "sqmean", "mos", "var"};
    for (std::size_t k = 0; k < slots; ++k) {
        cols.push_back("id_" + std::to_string(k));
        cols.push_back("x_" + std::to_string(k));
    }
    auto traj = make_table("trajectory", cols);
    auto events = make_table("events", {"policy", "time", "type", "ids"});
    for (std::size_t pi = 0; pi < runs.size(); ++pi) {
        const auto& policy = c.policies[pi];
        for (const auto& r : runs[pi].records) {
            std::vector<Cell> row{policy, r.t, static_cast<I64>(r.n)};
            if (r.descriptors) {
                row.insert(row.end(), {r.descriptors->squared_mean, r.descriptors->mean_of_squares,
                                       r.descriptors->variance});
            } else {
                row.insert(row.end(), {std::string{}, std::string{}, std::string{}});
            }
            for (std::size_t k = 0; k < slots; ++k) {
                if (k < r.agents.size()) {
                    row.emplace_back(static_cast<I64>(r.agents[k].id.value));
                    row.emplace_back(r.agents[k].value);
                } else {
                    row.emplace_back(std::string{});
                    row.emplace_back(std::string{});
                }
            }
            traj.add_row(std::move(row));
        }
        for (const auto& e : runs[pi].events)
            events.add_row({policy, e.time, opengossip::to_string(e.type), join_ids(e.ids)});
        traj.add_meta("events[" + policy + "]", std::to_string(runs[pi].event_count));
    }
    out.tables.push_back(std::move(traj));
    out.tables.push_back(std::move(events));
}

void simulate_ensemble(const ExperimentConfig& c, CommandResult& out) {
    const auto grid = c.grid();
    auto table = make_table("ensemble", {"policy", "t", "E_sqmean", "stderr_sqmean", "E_mos", "stderr_mos", "E_var",
                                         "stderr_var", "defined", "mean_n", "stderr_n", "p_empty", "n_min", "n_max"});
    auto by_size = make_table("by_size", {"policy", "t", "n", "count", "E_sqmean", "stderr_sqmean", "E_mos",
                                          "stderr_mos", "E_var", "stderr_var"});
    for (const auto& p : c.policies) {
        const auto stats = run_ensemble(c.simulation_spec(p), c.t_end, grid, c.replications, c.seed, parallel_of(c));
        for (const auto& g : stats.points) {
            I64 n_min = -1;
            I64 n_max = -1;
            for (std::size_t j = 0; j < g.size_histogram.size(); ++j)
                if (g.size_histogram[j] > 0) {
                    if (n_min < 0) n_min = static_cast<I64>(j);
                    n_max = static_cast<I64>(j);
                }
            const double empty = g.size_histogram.empty() ? 0.0 : static_cast<double>(g.size_histogram[0]);
            table.add_row({p, g.t, g.squared_mean.mean, g.squared_mean.std_error(), g.mean_of_squares.mean,
                           g.mean_of_squares.std_error(), g.variance.mean, g.variance.std_error(),
                           static_cast<I64>(g.defined_count()), g.size.mean, g.size.std_error(),
                           empty / static_cast<double>(stats.replications), n_min, n_max});
            if (c.mode == ModeKind::Open)
                for (const auto& s : g.conditioned)
                    by_size.add_row({p, g.t, static_cast<I64>(s.size), static_cast<I64>(s.variance.count),
                                     s.squared_mean.mean, s.squared_mean.std_error(), s.mean_of_squares.mean,
                                     s.mean_of_squares.std_error(), s.variance.mean, s.variance.std_error()});
        }
        table.add_meta("absorbed_replications[" + p + "]", std::to_string(stats.absorbed_replications));
    }
    table.add_meta("replications", std::to_string(c.replications));
    table.add_meta("conditioning", "descriptor columns average over replications with n >= 1");
    out.tables.push_back(std::move(table));
    if (c.mode == ModeKind::Open) out.tables.push_back(std::move(by_size));
}

int open_j_max(const ExperimentConfig& c) {
    if (c.j_max) return *c.j_max;
    if (c.rates.lambda_d > 0.0 && c.rates.lambda_a > 0.0)
        return std::max(default_j_max(c.rates.lambda_a / c.rates.lambda_d), c.n);
    if (c.rates.lambda_a > 0.0)
        throw DomainError("lambda_a > 0 with lambda_d = 0: the size grows without bound; set j_max explicitly");
    return std::max(c.n, 1);
}

void analyze_fixed(const ExperimentConfig& c, CommandResult& out) {
    const auto grid = c.grid();
    const double s2 = c.rates.sigma2;
    const double nd = c.n;
    const auto sys = build_fixed_size_ode(c.n, c.rates);
    const auto x = solve_ode(sys, {s2 / nd, s2}, grid);
    const double v0 = (1.0 - 1.0 / nd) * s2;
    const auto env_random = variance_bound_ode_random(c.n, c.rates, v0, grid);
    const auto env_adv = variance_bound_adversarial(c.rates, v0, grid);

    auto table = make_table("analytic", {"t", "sqmean", "mos", "var", "envelope_random", "envelope_adversarial"});
    for (std::size_t k = 0; k < grid.size(); ++k)
        table.add_row({grid[k], x[k].x0, x[k].x1, x[k].spread(), env_random.values[k], env_adv.values[k]});
    table.add_meta("initial", "i.i.d. zero-mean draws: X(0) = (sigma2 / n, sigma2)");
    out.tables.push_back(std::move(table));

    Summary sum;
    if (c.rates.lambda_r > 0.0) {
        const auto fp = fixed_point(c.n, c.rates);
        sum.add("fixed_point_sqmean", fp.squared_mean);
        sum.add("fixed_point_mos", fp.mean_of_squares);
        sum.add("fixed_point_var", fp.variance);
    } else {
        sum.add("fixed_point", std::string("closed system: squared mean conserved, variance decays to 0"));
    }
    sum.add("envelope_random_stationary", env_random.stationary ? Cell{*env_random.stationary} : Cell{std::string("unbounded")});
    sum.add("envelope_adversarial_stationary", env_adv.stationary ? Cell{*env_adv.stationary} : Cell{std::string("unbounded")});
    const auto sp = spectrum(c.n, c.rates);
    sum.add("r1", sp.r1);
    sum.add("r2", sp.r2);
    sum.add("r1_asymptote", sp.r1_asymptote);
    sum.add("r2_asymptote", sp.r2_asymptote);
    out.tables.push_back(std::move(sum.table));
}

void analyze_open(const ExperimentConfig& c, CommandResult& out) {
    const auto grid = c.grid();
    const int J = open_j_max(c);
    const auto init = iid_initial_condition(c.n, c.rates.sigma2, J);
    const auto ode = conditioned_moment_ode(c.rates, init, grid);
    const auto flow = variance_flow_envelope(c.rates, init, grid);

    auto table = make_table("analytic", {"t", "E_sqmean", "E_mos", "E_var", "occupancy", "E_var_given_nonempty",
                                         "envelope_var", "envelope_var_given_nonempty"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& s = ode.states[k];
        const Vec2 e = s.expected();
        const double occ = s.occupancy();
        auto cond = [&](double v) { return occ > 0.0 ? Cell{v / occ} : Cell{std::nan("")}; };
        table.add_row({grid[k], e.x0, e.x1, s.expected_variance(), occ, cond(s.expected_variance()),
                       flow.aggregate[k], cond(flow.aggregate[k])});
    }
    table.add_meta("j_max", std::to_string(J));
    table.add_meta("closure", "reflecting at j_max");
    out.tables.push_back(std::move(table));
    if (ode.truncation_warning)
        out.warnings.push_back("boundary flux at j_max reached " + format_double(ode.max_boundary_flux) +
                               " (> 1e-8); increase j_max");

    Summary sum;
    sum.add("j_max", static_cast<I64>(J));
    sum.add("max_boundary_flux", ode.max_boundary_flux);
    if (c.rates.lambda_d > 0.0 && c.rates.lambda_a > 0.0) {
        const double n0 = open_n0(c.rates);
        const auto size = birth_death_steady_state(n0, J);
        sum.add("n0", n0);
        sum.add("gamma", open_gamma(c.rates));
        sum.add("size_mean", size.mean);
        sum.add("size_variance", size.variance);
        sum.add("tail_mass", size.tail_mass);
        const auto sv = stationary_expected_variance(c.rates, J);
        sum.add("stationary_var", sv.unconditional);
        sum.add("stationary_var_given_nonempty", sv.conditioned);
        sum.add("stationary_envelope", stationary_variance_envelope(c.rates, J).value);
        const auto best = best_dual_bound(c.rates, J);
        sum.add("best_dual_bound", best.value);
        sum.add("best_dual_bound_feasible", static_cast<I64>(best.certificate.feasible));
        const auto expl = explicit_bound(c.rates, J);
        sum.add("explicit_bound", expl.value);
        sum.add("explicit_certificate_feasible", static_cast<I64>(expl.certificate.feasible));
    } else {
        sum.add("steady_state", std::string("none (needs lambda_a > 0 and lambda_d > 0)"));
    }
    out.tables.push_back(std::move(sum.table));
}

}  // namespace

const ResultTable& CommandResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("no table '" + name + "'");
}

CommandResult cmd_simulate(const ExperimentConfig& config) {
    CommandResult out;
    if (config.log_events)
        simulate_single(config, out);
    else
        simulate_ensemble(config, out);
    return out;
}

CommandResult cmd_analyze(const ExperimentConfig& config) {
    CommandResult out;
    if (config.mode == ModeKind::Fixed)
        analyze_fixed(config, out);
    else
        analyze_open(config, out);
    return out;
}

CommandResult cmd_spectrum(const ExperimentConfig& config) {
    if (config.mode != ModeKind::Fixed) throw ConfigError("spectrum applies to fixed mode only");
    const auto sp = spectrum(config.n, config.rates);
    const auto sys = build_fixed_size_ode(config.n, config.rates);
    Summary sum;
    sum.table.name = "spectrum";
    sum.add("n", static_cast<I64>(config.n));
    sum.add("lambda_g", config.rates.lambda_g);
    sum.add("lambda_r", config.rates.lambda_r);
    if (const auto rho = config.rates.rho()) sum.add("rho", *rho);
    sum.add("trace", sys.m.trace());
    sum.add("determinant", sys.m.det());
    sum.add("discriminant", sp.discriminant);
    sum.add("eigenvalue_upper", sp.upper);
    sum.add("eigenvalue_lower", sp.lower);
    sum.add("r1", sp.r1);
    sum.add("r2", sp.r2);
    sum.add("r1_asymptote", sp.r1_asymptote);
    sum.add("r2_asymptote", sp.r2_asymptote);
    sum.add("v1_0", sp.v1.x0);
    sum.add("v1_1", sp.v1.x1);
    sum.add("v2_0", sp.v2.x0);
    sum.add("v2_1", sp.v2.x1);
    sum.add("degenerate", static_cast<I64>(sp.degenerate));
    CommandResult out;
    out.tables.push_back(std::move(sum.table));
    return out;
}

CommandResult cmd_bound(const ExperimentConfig& config) {
    if (config.mode != ModeKind::Open) throw ConfigError("bound applies to open mode only");
    if (!(config.rates.lambda_d > 0.0) || !(config.rates.lambda_a > 0.0))
        throw ConfigError("bound needs lambda_a > 0 and lambda_d > 0 (stationary regime)");
    const double ld = config.rates.lambda_d;
    const std::vector<double> gammas =
        config.gamma_grid.empty() ? std::vector<double>{config.rates.lambda_g / ld} : config.gamma_grid;
    const int J = open_j_max(config);

    CommandResult out;
    auto table = make_table("bounds", {"gamma", "lambda_g", "mc_var", "mc_stderr", "mc_var_unconditional",
                                       "mc_stderr_unconditional", "occupancy", "stationary_var",
                                       "stationary_var_given_nonempty", "envelope", "best_bound", "best_bound_feasible",
                                       "duality_gap", "explicit_bound", "explicit_feasible",
                                       "explicit_first_violation", "explicit_min_residual"});
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        ExperimentConfig c = config;
        c.rates.lambda_g = gammas[k] * ld;
        const auto spec = c.simulation_spec(c.policies.front());
        const double burn = c.burn_in.value_or(default_burn_in(spec.mode, spec.rates));
        if (!(burn < c.t_end)) throw ConfigError("burn_in must be smaller than t_end");
        const auto mc =
            estimate_asymptotic_variance(spec, burn, c.t_end, c.replications, splitmix64(c.seed + k), parallel_of(c));
        const auto sv = stationary_expected_variance(c.rates, J);
        const auto env = stationary_variance_envelope(c.rates, J);
        const auto best = best_dual_bound(c.rates, J);
        const auto expl = explicit_bound(c.rates, J);
        table.add_row({gammas[k], c.rates.lambda_g, mc.estimate, mc.std_error, mc.unconditional,
                       mc.unconditional_std_error, mc.occupancy, sv.unconditional, sv.conditioned, env.value,
                       best.value, static_cast<I64>(best.certificate.feasible), best.duality_gap, expl.value,
                       static_cast<I64>(expl.certificate.feasible),
                       static_cast<I64>(expl.certificate.first_violation.value_or(0)),
                       expl.certificate.min_residual});
        if (!expl.certificate.feasible)
            out.warnings.push_back("explicit-bound sequence violates the feasibility inequality at gamma = " +
                                   format_double(gammas[k]) + ", j = " +
                                   std::to_string(*expl.certificate.first_violation));
    }
    table.add_meta("j_max", std::to_string(J));
    table.add_meta("policy", config.policies.front());
    table.add_meta("mc", "time average of Var over [burn_in, t_end] given n >= 1; unconditional counts n = 0 as 0");
    table.add_meta("best_bound", "LP optimum over j = 1..j_max, valid up to the duality gap");
    out.tables.push_back(std::move(table));
    return out;
}

std::vector<std::string> command_names() { return {"simulate", "analyze", "bound", "spectrum"}; }

CommandResult run_command(const std::string& name, const ExperimentConfig& config) {
    config.validate();
    if (name == "simulate") return cmd_simulate(config);
    if (name == "analyze") return cmd_analyze(config);
    if (name == "bound") return cmd_bound(config);
    if (name == "spectrum") return cmd_spectrum(config);
    throw ConfigError("unknown command '" + name + "' (expected simulate|analyze|bound|spectrum)");
}

std::string render(const CommandResult& result, const std::string& command, const ExperimentConfig& config,
                   OutputFormat format) {
    const std::vector<std::pair<std::string, std::string>> common{
        {"tool", std::string(kToolName) + " " + kToolVersion},
        {"command", command},
        {"preset", config.preset},
        {"config_hash", config.hash()},
        {"seed", std::to_string(config.seed)}};
    if (format == OutputFormat::Csv) {
        std::vector<ResultTable> tables = result.tables;
        for (auto& t : tables) t.metadata.insert(t.metadata.begin(), common.begin(), common.end());
        return to_csv(tables);
    }
    nlohmann::json j = to_json(result.tables);
    j["metadata"] = nlohmann::json::object();
    for (const auto& [k, v] : common) j["metadata"][k] = v;
    j["metadata"]["config"] = config.canonical_json();
    j["warnings"] = result.warnings;
    return j.dump(2) + "\n";
}

}  // namespace opengossip::cli
