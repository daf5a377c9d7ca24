#include "opengossip/core.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

namespace opengossip {

SystemState::SystemState(std::vector<Agent> agents, double time) : agents_(std::move(agents)) {
    set_time(time);
    std::set<AgentId> seen;
    for (const auto& a : agents_) {
        if (!seen.insert(a.id).second) throw DomainError("duplicate agent id " + std::to_string(a.id.value));
        next_id_ = std::max(next_id_, a.id.value + 1);
    }
}

SystemState SystemState::from_values(std::span<const double> values, double time) {
    std::vector<Agent> agents;
    agents.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) agents.push_back({AgentId{i}, values[i]});
    return SystemState(std::move(agents), time);
}

void SystemState::set_time(double t) {
    if (!(t >= 0.0)) throw DomainError("system time must be non-negative");
    time_ = t;
}

std::vector<double> SystemState::values() const {
    std::vector<double> out;
    out.reserve(agents_.size());
    for (const auto& a : agents_) out.push_back(a.value);
    return out;
}

AgentId SystemState::add(double value) {
    const AgentId id = issue_id();
    agents_.push_back({id, value});
    return id;
}

Agent SystemState::remove_at(std::size_t index) {
    if (index >= agents_.size()) throw DomainError("agent index out of range");
    Agent gone = agents_[index];
    agents_.erase(agents_.begin() + static_cast<std::ptrdiff_t>(index));
    return gone;
}

namespace {

template <typename Range, typename Value>
Descriptors descriptors_of(const Range& items, Value value_of) {
    const double n = static_cast<double>(std::size(items));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& item : items) {
        const double v = value_of(item);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    // Two-pass variance stays non-negative and avoids cancellation.
    double ss = 0.0;
    for (const auto& item : items) {
        const double dv = value_of(item) - mean;
        ss += dv * dv;
    }

    Descriptors d;
    d.mean_of_squares = sum_sq / n;
    d.squared_mean = std::min(mean * mean, d.mean_of_squares);
    d.variance = ss / n;
    return d;
}

}  // namespace

Descriptors compute_descriptors(std::span<const double> values) {
    if (values.empty()) throw EmptySystemError("descriptors are undefined for an empty system");
    return descriptors_of(values, [](double v) { return v; });
}

Descriptors compute_descriptors(const SystemState& state) {
    if (state.empty()) throw EmptySystemError("descriptors are undefined for an empty system");
    return descriptors_of(state.agents(), [](const Agent& a) { return a.value; });
}

std::optional<Descriptors> try_descriptors(const SystemState& state) {
    if (state.empty()) return std::nullopt;
    return compute_descriptors(state);
}

std::optional<double> RatesConfig::rho() const {
    if (lambda_r > 0.0) return lambda_g / lambda_r;
    return std::nullopt;
}

std::optional<double> RatesConfig::gamma() const {
    if (lambda_d > 0.0) return lambda_g / lambda_d;
    return std::nullopt;
}

std::optional<double> RatesConfig::n0() const {
    if (lambda_d > 0.0) return lambda_a / lambda_d;
    return std::nullopt;
}

void RatesConfig::validate() const {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError(std::string(name) + " must be finite and non-negative");
    };
    check(lambda_g, "lambda_g");
    check(lambda_r, "lambda_r");
    check(lambda_a, "lambda_a");
    check(lambda_d, "lambda_d");
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) throw ConfigError("sigma2 must be finite and positive");
}

void ValueDistribution::validate() const {
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) throw ConfigError("sigma2 must be finite and positive");
}

double draw_initial_value(const ValueDistribution& dist, RandomSource& rng) {
    switch (dist.family) {
        case DistributionFamily::Normal:
            return std::sqrt(dist.sigma2) * rng.standard_normal();
        case DistributionFamily::Uniform: {
            // U(-a, a) has variance a^2 / 3.
            const double a = std::sqrt(3.0 * dist.sigma2);
            return a * (2.0 * rng.uniform01() - 1.0);
        }
    }
    return 0.0;
}

std::string to_string(DistributionFamily family) {
    return family == DistributionFamily::Normal ? "normal" : "uniform";
}

DistributionFamily parse_distribution_family(const std::string& name) {
    if (name == "normal") return DistributionFamily::Normal;
    if (name == "uniform") return DistributionFamily::Uniform;
    throw ConfigError("unknown distribution '" + name + "' (expected normal|uniform)");
}

}  // namespace opengossip
