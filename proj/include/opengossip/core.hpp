#pragma once

// Domain types shared by the simulator and the analytics: agent identities,
// the live system state, the scale-independent descriptors and the event
// rates.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opengossip/errors.hpp"
#include "opengossip/linalg2.hpp"
#include "opengossip/random.hpp"

namespace opengossip {

/// Lifetime-unique agent label. Ids of departed agents are never re-issued.
struct AgentId {
    std::uint64_t value = 0;
    friend constexpr auto operator<=>(const AgentId&, const AgentId&) = default;
};

struct Agent {
    AgentId id;
    double value = 0.0;
    friend constexpr bool operator==(const Agent&, const Agent&) = default;
};

/// The open system at one instant: an ordered set of agents and the clock.
class SystemState {
public:
    SystemState() = default;

    /// Throws DomainError on duplicate ids or negative time.
    explicit SystemState(std::vector<Agent> agents, double time = 0.0);

    /// Agents labelled 0..values.size()-1.
    static SystemState from_values(std::span<const double> values, double time = 0.0);

    std::size_t size() const { return agents_.size(); }
    bool empty() const { return agents_.empty(); }
    double time() const { return time_; }
    void set_time(double t);

    std::span<const Agent> agents() const { return agents_; }
    const Agent& agent(std::size_t index) const { return agents_.at(index); }
    double value(std::size_t index) const { return agents_[index].value; }
    void set_value(std::size_t index, double v) { agents_[index].value = v; }
    std::vector<double> values() const;

    /// Issues the next never-used id.
    AgentId issue_id() { return AgentId{next_id_++}; }

    /// Adds an agent with a freshly issued id and returns that id.
    AgentId add(double value);

    /// Removes the agent at `index`, preserving the order of the others.
    Agent remove_at(std::size_t index);

    friend bool operator==(const SystemState& l, const SystemState& r) {
        return l.agents_ == r.agents_ && l.time_ == r.time_;
    }

private:
    std::vector<Agent> agents_;
    double time_ = 0.0;
    std::uint64_t next_id_ = 0;
};

/// Squared empirical mean, empirical mean of squares and variance.
struct Descriptors {
    double squared_mean = 0.0;
    double mean_of_squares = 0.0;
    double variance = 0.0;

    /// The descriptor vector X = (squared mean, mean of squares).
    Vec2 moments() const { return {squared_mean, mean_of_squares}; }
};

/// Throws EmptySystemError when the state holds no agent.
Descriptors compute_descriptors(const SystemState& state);
Descriptors compute_descriptors(std::span<const double> values);

/// Descriptors, or nullopt for the empty system where they are undefined.
std::optional<Descriptors> try_descriptors(const SystemState& state);

/// Poisson rates and the variance of the value distribution.
///
/// lambda_g and lambda_r are per-agent rates in fixed-size mode; lambda_a is
/// a system-level rate and lambda_d a per-agent rate in open mode.
struct RatesConfig {
    double lambda_g = 0.0;
    double lambda_r = 0.0;
    double lambda_a = 0.0;
    double lambda_d = 0.0;
    double sigma2 = 1.0;

    /// lambda_g / lambda_r, when lambda_r > 0.
    std::optional<double> rho() const;
    /// lambda_g / lambda_d, when lambda_d > 0.
    std::optional<double> gamma() const;
    /// lambda_a / lambda_d, when lambda_d > 0.
    std::optional<double> n0() const;

    /// Throws ConfigError for negative or non-finite rates or sigma2 <= 0.
    void validate() const;
};

enum class DistributionFamily { Normal, Uniform };

/// Zero-mean value distribution with variance sigma2.
struct ValueDistribution {
    DistributionFamily family = DistributionFamily::Normal;
    double sigma2 = 1.0;

    void validate() const;
};

double draw_initial_value(const ValueDistribution& dist, RandomSource& rng);

std::string to_string(DistributionFamily family);
DistributionFamily parse_distribution_family(const std::string& name);

}  // namespace opengossip
