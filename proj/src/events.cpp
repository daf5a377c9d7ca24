#include "opengossip/events.hpp"

#include <cmath>
#include <limits>

namespace opengossip {

std::string to_string(EventType type) {
    switch (type) {
        case EventType::Gossip: return "gossip";
        case EventType::Arrival: return "arrival";
        case EventType::Departure: return "departure";
        case EventType::Replacement: return "replacement";
    }
    return "?";
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Random: return "random";
        case PolicyKind::MinAbsValue: return "min_abs";
        case PolicyKind::Custom: return "custom";
    }
    return "?";
}

DeparturePolicy DeparturePolicy::random() {
    return DeparturePolicy(PolicyKind::Random, "random", [](const SystemState& s, RandomSource& rng) {
        return static_cast<std::size_t>(rng.uniform_index(s.size()));
    });
}

DeparturePolicy DeparturePolicy::min_abs_value() {
    return DeparturePolicy(PolicyKind::MinAbsValue, "min_abs", [](const SystemState& s, RandomSource&) {
        std::size_t best = 0;
        double best_abs = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double a = std::abs(s.value(k));
            if (a < best_abs) {
                best_abs = a;
                best = k;
            }
        }
        return best;
    });
}

DeparturePolicy DeparturePolicy::custom(std::string name, DepartureSelector selector) {
    if (!selector) throw ConfigError("custom departure policy needs a selector");
    return DeparturePolicy(PolicyKind::Custom, std::move(name), std::move(selector));
}

std::size_t DeparturePolicy::select(const SystemState& state, RandomSource& rng) const {
    if (state.empty()) throw EmptySystemError("departure from an empty system");
    const std::size_t idx = selector_(state, rng);
    if (idx >= state.size()) throw DomainError("departure policy '" + name_ + "' chose an out-of-range agent");
    return idx;
}

DeparturePolicy parse_policy(const std::string& name) {
    if (name == "random") return DeparturePolicy::random();
    if (name == "min_abs") return DeparturePolicy::min_abs_value();
    throw ConfigError("unknown departure policy '" + name + "' (expected random|min_abs)");
}

void average_pair(SystemState& state, std::size_t i, std::size_t j) {
    const double avg = (state.value(i) + state.value(j)) / 2.0;
    state.set_value(i, avg);
    state.set_value(j, avg);
}

GossipOutcome perform_gossip(SystemState& state, RandomSource& rng) {
    if (state.empty()) throw EmptySystemError("gossip in an empty system");
    const auto n = state.size();
    GossipOutcome out;
    out.i = static_cast<std::size_t>(rng.uniform_index(n));
    out.j = static_cast<std::size_t>(rng.uniform_index(n));
    out.id_i = state.agent(out.i).id;
    out.id_j = state.agent(out.j).id;
    average_pair(state, out.i, out.j);
    return out;
}

AgentId perform_arrival(SystemState& state, const ValueDistribution& dist, RandomSource& rng) {
    return state.add(draw_initial_value(dist, rng));
}

Agent perform_departure(SystemState& state, const DeparturePolicy& policy, RandomSource& rng) {
    return state.remove_at(policy.select(state, rng));
}

ReplacementOutcome perform_replacement(SystemState& state, const DeparturePolicy& policy,
                                       const ValueDistribution& dist, RandomSource& rng) {
    ReplacementOutcome out;
    out.departed = perform_departure(state, policy, rng);
    out.arrived = perform_arrival(state, dist, rng);
    return out;
}

SystemState apply_gossip(SystemState state, RandomSource& rng) {
    perform_gossip(state, rng);
    return state;
}

SystemState apply_arrival(SystemState state, const ValueDistribution& dist, RandomSource& rng) {
    perform_arrival(state, dist, rng);
    return state;
}

SystemState apply_departure(SystemState state, const DeparturePolicy& policy, RandomSource& rng) {
    perform_departure(state, policy, rng);
    return state;
}

SystemState apply_replacement(SystemState state, const DeparturePolicy& policy, const ValueDistribution& dist,
                              RandomSource& rng) {
    perform_replacement(state, policy, dist, rng);
    return state;
}

namespace {

void require_size(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

void require_random_policy(EventKind kind) {
    if (kind.policy != PolicyKind::Random)
        throw UnsupportedPolicyError("no exact moment map for " + to_string(kind.type) + " with policy " +
                                     to_string(kind.policy) + "; only variance bounds exist");
}

}  // namespace

MomentMap moment_map(EventKind kind, int n, double sigma2) {
    const double nd = n;
    MomentMap m;
    m.source_size = n;
    switch (kind.type) {
        case EventType::Gossip:
            require_size(n >= 1, "gossip map needs n >= 1");
            m.matrix = Mat2::of(1.0, 0.0, 1.0 / nd, 1.0 - 1.0 / nd);
            m.arrival_size = n;
            break;
        case EventType::Arrival: {
            // n = 0 is allowed: the arriving agent alone gives X' = (x^2, x^2).
            require_size(n >= 0, "arrival map needs n >= 0");
            const double np1 = nd + 1.0;
            m.matrix = Mat2::diag(nd * nd / (np1 * np1), nd / np1);
            m.offset = {sigma2 / (np1 * np1), sigma2 / np1};
            m.arrival_size = n + 1;
            break;
        }
        case EventType::Departure: {
            require_random_policy(kind);
            require_size(n >= 2, "departure map needs n >= 2 (descriptors undefined after leaving n = 1)");
            const double w = 1.0 / ((nd - 1.0) * (nd - 1.0));
            m.matrix = Mat2::of(1.0 - w, w, 0.0, 1.0);
            m.arrival_size = n - 1;
            break;
        }
        case EventType::Replacement:
            require_random_policy(kind);
            require_size(n >= 1, "replacement map needs n >= 1");
            if (n == 1) {
                // The lone agent is swapped for a fresh draw: X' = (x^2, x^2).
                m.matrix = Mat2::of(0.0, 0.0, 0.0, 0.0);
                m.offset = {sigma2, sigma2};
            } else {
                m.matrix = Mat2::of((nd - 2.0) / nd, 1.0 / (nd * nd), 0.0, (nd - 1.0) / nd);
                m.offset = {sigma2 / (nd * nd), sigma2 / nd};
            }
            m.arrival_size = n;
            break;
    }
    return m;
}

VarianceRecursion variance_contraction(EventKind kind, int n, double sigma2) {
    const double nd = n;
    switch (kind.type) {
        case EventType::Gossip:
            require_size(n >= 1, "gossip needs n >= 1");
            return {1.0 - 1.0 / nd, 0.0};
        case EventType::Arrival:
            require_size(n >= 0, "arrival needs n >= 0");
            return {nd / (nd + 1.0), sigma2 / (nd + 1.0)};
        case EventType::Departure:
            require_random_policy(kind);
            require_size(n >= 2, "departure needs n >= 2");
            return {1.0 - 1.0 / ((nd - 1.0) * (nd - 1.0)), 0.0};
        case EventType::Replacement:
            require_random_policy(kind);
            require_size(n >= 2, "replacement variance recursion needs n >= 2");
            return {(nd * nd - nd - 1.0) / (nd * nd), (nd * nd - 1.0) * sigma2 / (nd * nd * nd)};
    }
    return {};
}

double adversarial_variance_bound(EventType type, int n, double variance, double sigma2) {
    switch (type) {
        case EventType::Departure:
            require_size(n >= 2, "adversarial departure bound needs n >= 2");
            return n * variance / (n - 1.0);
        case EventType::Replacement:
            require_size(n >= 1, "adversarial replacement bound needs n >= 1");
            return variance + sigma2 / n;
        default:
            throw DomainError("adversarial bounds exist only for departures and replacements");
    }
}

}  // namespace opengossip
