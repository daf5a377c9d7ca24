#pragma once

// Event semantics (what each event does to a state) and the exact affine
// maps E(X' | X, event) = A X + b on the descriptor vector.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "opengossip/core.hpp"
#include "opengossip/linalg2.hpp"

namespace opengossip {

enum class EventType { Gossip, Arrival, Departure, Replacement };

enum class PolicyKind { Random, MinAbsValue, Custom };

std::string to_string(EventType type);
std::string to_string(PolicyKind kind);

/// Picks the index of the departing agent in a non-empty state.
using DepartureSelector = std::function<std::size_t(const SystemState&, RandomSource&)>;

/// Rule choosing which agent leaves at a departure or replacement.
class DeparturePolicy {
public:
    /// Uniformly random departing agent (the default).
    static DeparturePolicy random();
    /// Agent with minimal |x_j|; first such index on ties.
    static DeparturePolicy min_abs_value();
    static DeparturePolicy custom(std::string name, DepartureSelector selector);

    DeparturePolicy() : DeparturePolicy(random()) {}

    PolicyKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    std::size_t select(const SystemState& state, RandomSource& rng) const;

private:
    DeparturePolicy(PolicyKind kind, std::string name, DepartureSelector selector)
        : kind_(kind), name_(std::move(name)), selector_(std::move(selector)) {}

    PolicyKind kind_;
    std::string name_;
    DepartureSelector selector_;
};

DeparturePolicy parse_policy(const std::string& name);

/// Event type plus the departure policy for Departure and Replacement.
struct EventKind {
    EventType type = EventType::Gossip;
    PolicyKind policy = PolicyKind::Random;

    static constexpr EventKind gossip() { return {EventType::Gossip, PolicyKind::Random}; }
    static constexpr EventKind arrival() { return {EventType::Arrival, PolicyKind::Random}; }
    static constexpr EventKind departure(PolicyKind p = PolicyKind::Random) { return {EventType::Departure, p}; }
    static constexpr EventKind replacement(PolicyKind p = PolicyKind::Random) {
        return {EventType::Replacement, p};
    }
};

/// Expected effect of one event at one system size: E(X'|X) = matrix X + offset.
struct MomentMap {
    Mat2 matrix;
    Vec2 offset;
    int source_size = 0;
    int arrival_size = 0;

    Vec2 apply(const Vec2& x) const { return matrix * x + offset; }
};

// ---------------------------------------------------------------------------
// In-place event primitives used by the engine. Each returns the agent ids it
// touched so callers can log events.

struct GossipOutcome {
    std::size_t i = 0;
    std::size_t j = 0;
    AgentId id_i;
    AgentId id_j;
};

struct ReplacementOutcome {
    Agent departed;
    AgentId arrived;
};

/// Averages the agents at indices i and j (i == j leaves the state unchanged).
void average_pair(SystemState& state, std::size_t i, std::size_t j);

/// Draws i, j independently and uniformly (self-pairs allowed) and averages.
GossipOutcome perform_gossip(SystemState& state, RandomSource& rng);
AgentId perform_arrival(SystemState& state, const ValueDistribution& dist, RandomSource& rng);
Agent perform_departure(SystemState& state, const DeparturePolicy& policy, RandomSource& rng);
ReplacementOutcome perform_replacement(SystemState& state, const DeparturePolicy& policy,
                                       const ValueDistribution& dist, RandomSource& rng);

// Value-returning forms.

SystemState apply_gossip(SystemState state, RandomSource& rng);
SystemState apply_arrival(SystemState state, const ValueDistribution& dist, RandomSource& rng);
SystemState apply_departure(SystemState state, const DeparturePolicy& policy, RandomSource& rng);
SystemState apply_replacement(SystemState state, const DeparturePolicy& policy, const ValueDistribution& dist,
                              RandomSource& rng);

// ---------------------------------------------------------------------------
// Exact and bounding moment maps.

/// Exact (A, b) for an event at system size n.
///
/// Departure needs n >= 2; only the Random policy has an exact map, other
/// policies raise UnsupportedPolicyError.
MomentMap moment_map(EventKind kind, int n, double sigma2);

/// Coefficients (factor, additive) of E Var' = factor * Var + additive.
/// Exact for Gossip and Departure; an upper bound for Arrival and
/// Replacement.
struct VarianceRecursion {
    double factor = 1.0;
    double additive = 0.0;
};
VarianceRecursion variance_contraction(EventKind kind, int n, double sigma2);

/// Upper bound on E Var' after a departure (n >= 2) or replacement chosen by
/// an arbitrary policy, given the pre-event variance.
double adversarial_variance_bound(EventType type, int n, double variance, double sigma2);

}  // namespace opengossip
