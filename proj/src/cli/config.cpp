#include "opengossip/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "opengossip/errors.hpp"
#include "opengossip/events.hpp"

namespace opengossip::cli {

using nlohmann::json;

std::string to_string(ModeKind mode) { return mode == ModeKind::Fixed ? "fixed" : "open"; }
std::string to_string(OutputFormat format) { return format == OutputFormat::Csv ? "csv" : "json"; }

OutputFormat parse_output_format(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format '" + name + "' (expected csv|json)");
}

void ExperimentConfig::validate() const {
    rates.validate();
    if (mode == ModeKind::Fixed) {
        if (n < 2) throw ConfigError("fixed mode needs n >= 2");
        if (rates.lambda_a != 0.0 || rates.lambda_d != 0.0)
            throw ConfigError("fixed mode does not use lambda_a / lambda_d; replacements are set with lambda_r");
    } else {
        if (n < 0) throw ConfigError("n_init must be >= 0");
        if (rates.lambda_r != 0.0)
            throw ConfigError("open mode does not use lambda_r; use lambda_a and lambda_d");
        if (j_max && *j_max < std::max(1, n)) throw ConfigError("j_max must be >= max(1, n_init)");
    }
    if (!std::isfinite(t_end) || !(t_end > 0.0)) throw ConfigError("t_end must be positive and finite");
    if (grid_points < 2) throw ConfigError("grid_points must be >= 2");
    if (replications == 0) throw ConfigError("replications must be >= 1");
    if (chunk == 0) throw ConfigError("chunk must be >= 1");
    if (policies.empty()) throw ConfigError("policies must list at least one departure policy");
    std::set<std::string> seen;
    for (const auto& p : policies) {
        parse_policy(p);
        if (!seen.insert(p).second) throw ConfigError("policy '" + p + "' listed twice");
    }
    // Checked against t_end by the bound command, the only one that uses it.
    if (burn_in && (!std::isfinite(*burn_in) || *burn_in < 0.0)) throw ConfigError("burn_in must be >= 0");
    for (double g : gamma_grid)
        if (!std::isfinite(g) || g < 0.0) throw ConfigError("gamma_grid entries must be finite and >= 0");
    if (log_events && replications != 1) throw ConfigError("log_events needs replications = 1 (single trajectory)");
    for (const auto& p : policies) simulation_spec(p).validate();
}

SimulationSpec ExperimentConfig::simulation_spec(const std::string& policy) const {
    SimulationSpec s;
    if (mode == ModeKind::Fixed)
        s.mode = FixedSize{n};
    else
        s.mode = Open{n};
    s.rates = rates;
    s.family = distribution;
    s.policy = parse_policy(policy);
    return s;
}

std::vector<double> ExperimentConfig::grid() const { return make_grid(t_end, grid_points); }

json ExperimentConfig::canonical_json() const {
    json j;
    j["mode"] = to_string(mode);
    j[mode == ModeKind::Fixed ? "n" : "n_init"] = n;
    j["rates"] = {{"lambda_g", rates.lambda_g},
                  {"lambda_r", rates.lambda_r},
                  {"lambda_a", rates.lambda_a},
                  {"lambda_d", rates.lambda_d}};
    j["sigma2"] = rates.sigma2;
    j["distribution"] = opengossip::to_string(distribution);
    j["policies"] = policies;
    j["t_end"] = t_end;
    j["grid_points"] = grid_points;
    j["replications"] = replications;
    j["seed"] = seed;
    if (burn_in) j["burn_in"] = *burn_in;
    if (j_max) j["j_max"] = *j_max;
    if (!gamma_grid.empty()) j["gamma_grid"] = gamma_grid;
    j["log_events"] = log_events;
    j["chunk"] = chunk;
    return j;
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json().dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type");
    }
}

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config field '" + key + "' must be a number");
    return v.get<double>();
}

template <typename T>
T get_count(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config field '" + key + "' must be an integer");
    if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
    const auto x = v.get<std::int64_t>();
    if (x < 0) throw ConfigError("config field '" + key + "' must be >= 0");
    return static_cast<T>(x);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
}

}  // namespace

ExperimentConfig parse_config(const json& doc, ExperimentConfig c) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    reject_unknown(doc,
                   {"mode", "n", "n_init", "rates", "sigma2", "distribution", "policies", "t_end", "grid_points",
                    "replications", "seed", "burn_in", "j_max", "gamma_grid", "log_events", "threads", "chunk",
                    "output", "preset"},
                   "");

    if (doc.contains("preset")) c.preset = get_as<std::string>(doc["preset"], "preset");
    if (doc.contains("mode")) {
        const auto m = get_as<std::string>(doc["mode"], "mode");
        if (m == "fixed")
            c.mode = ModeKind::Fixed;
        else if (m == "open")
            c.mode = ModeKind::Open;
        else
            throw ConfigError("mode must be 'fixed' or 'open', got '" + m + "'");
    }
    if (doc.contains("n") && doc.contains("n_init")) throw ConfigError("give either 'n' or 'n_init', not both");
    if (doc.contains("n")) {
        if (c.mode != ModeKind::Fixed) throw ConfigError("'n' is for fixed mode; open mode uses 'n_init'");
        c.n = get_count<int>(doc["n"], "n");
    }
    if (doc.contains("n_init")) {
        if (c.mode != ModeKind::Open) throw ConfigError("'n_init' is for open mode; fixed mode uses 'n'");
        c.n = get_count<int>(doc["n_init"], "n_init");
    }
    if (doc.contains("rates")) {
        const auto& r = doc["rates"];
        if (!r.is_object()) throw ConfigError("'rates' must be an object");
        reject_unknown(r, {"lambda_g", "lambda_r", "lambda_a", "lambda_d"}, "rates.");
        if (r.contains("lambda_g")) c.rates.lambda_g = get_number(r["lambda_g"], "rates.lambda_g");
        if (r.contains("lambda_r")) c.rates.lambda_r = get_number(r["lambda_r"], "rates.lambda_r");
        if (r.contains("lambda_a")) c.rates.lambda_a = get_number(r["lambda_a"], "rates.lambda_a");
        if (r.contains("lambda_d")) c.rates.lambda_d = get_number(r["lambda_d"], "rates.lambda_d");
    }
    if (doc.contains("sigma2")) c.rates.sigma2 = get_number(doc["sigma2"], "sigma2");
    if (doc.contains("distribution"))
        c.distribution = parse_distribution_family(get_as<std::string>(doc["distribution"], "distribution"));
    if (doc.contains("policies")) c.policies = get_as<std::vector<std::string>>(doc["policies"], "policies");
    if (doc.contains("t_end")) c.t_end = get_number(doc["t_end"], "t_end");
    if (doc.contains("grid_points")) c.grid_points = get_count<std::size_t>(doc["grid_points"], "grid_points");
    if (doc.contains("replications")) c.replications = get_count<std::uint64_t>(doc["replications"], "replications");
    if (doc.contains("seed")) c.seed = get_count<std::uint64_t>(doc["seed"], "seed");
    if (doc.contains("burn_in")) c.burn_in = get_number(doc["burn_in"], "burn_in");
    if (doc.contains("j_max")) c.j_max = get_count<int>(doc["j_max"], "j_max");
    if (doc.contains("gamma_grid")) {
        if (!doc["gamma_grid"].is_array()) throw ConfigError("'gamma_grid' must be an array of numbers");
        c.gamma_grid.clear();
        for (const auto& g : doc["gamma_grid"]) c.gamma_grid.push_back(get_number(g, "gamma_grid"));
    }
    if (doc.contains("log_events")) c.log_events = get_as<bool>(doc["log_events"], "log_events");
    if (doc.contains("threads")) c.threads = get_count<unsigned>(doc["threads"], "threads");
    if (doc.contains("chunk")) c.chunk = get_count<std::size_t>(doc["chunk"], "chunk");
    if (doc.contains("output")) {
        const auto& o = doc["output"];
        if (!o.is_object()) throw ConfigError("'output' must be an object");
        reject_unknown(o, {"path", "format"}, "output.");
        if (o.contains("path")) c.out_path = get_as<std::string>(o["path"], "output.path");
        if (o.contains("format")) c.format = parse_output_format(get_as<std::string>(o["format"], "output.format"));
    }
    return c;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc, std::move(base));
}

std::vector<std::string> preset_names() { return {"fig1", "fig3", "fig4", "fig5"}; }

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    if (name == "fig1") {
        // Four agents, one replacement per nine gossips, one realization.
        c.mode = ModeKind::Fixed;
        c.n = 4;
        c.rates.lambda_g = 9.0;
        c.rates.lambda_r = 1.0;
        c.t_end = 5.0;
        c.grid_points = 501;
        c.replications = 1;
        c.log_events = true;
        c.seed = 1;
    } else if (name == "fig3") {
        c.mode = ModeKind::Fixed;
        c.n = 50;
        c.rates.lambda_g = 19.0;
        c.rates.lambda_r = 1.0;
        c.t_end = 10.0;
        c.grid_points = 101;
        c.replications = 10000;
        c.seed = 1;
    } else if (name == "fig4") {
        c.mode = ModeKind::Fixed;
        c.n = 4;
        c.rates.lambda_g = 9.0;
        c.rates.lambda_r = 1.0;
        c.policies = {"random", "min_abs"};
        c.t_end = 3.0;
        c.grid_points = 61;
        c.replications = 10000;
        c.seed = 1;
    } else if (name == "fig5") {
        // Five initial agents, lambda_a = lambda_d = 1 (so n0 = 1).
        c.mode = ModeKind::Open;
        c.n = 5;
        c.rates.lambda_a = 1.0;
        c.rates.lambda_d = 1.0;
        c.rates.lambda_g = 10.0;
        c.gamma_grid = {1.0, 2.0, 5.0, 10.0, 20.0};
        c.t_end = 520.0;
        c.burn_in = 20.0;
        c.grid_points = 53;
        c.replications = 200;
        c.seed = 1;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected fig1|fig3|fig4|fig5)");
    }
    return c;
}

}  // namespace opengossip::cli
