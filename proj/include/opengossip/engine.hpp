#pragma once

// Continuous-time event-driven simulation of open gossip systems.
//
// Events are scheduled by a single superposed exponential clock of total
// rate Lambda(n) followed by a categorical draw of the event type, which is
// equivalent in law to independent per-agent Poisson clocks and re-reads
// the rates after every size change:
//
//   fixed size:  Lambda = n (lambda_g + lambda_r)         gossip | replacement
//   open:        Lambda = n lambda_g + lambda_a + n lambda_d
//                                                 gossip | arrival | departure
//
// Grid samples are left-continuous: a grid time that coincides with an
// event time records the state just before that event.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "opengossip/core.hpp"
#include "opengossip/events.hpp"

namespace opengossip {

struct FixedSize {
    int n = 1;
};

struct Open {
    int n_init = 0;
};

using SimMode = std::variant<FixedSize, Open>;

bool is_fixed_size(const SimMode& mode);
/// n for fixed size, n_init for open mode.
int initial_size(const SimMode& mode);

/// Everything a single run needs apart from the seed and time grid.
struct SimulationSpec {
    SimMode mode = FixedSize{2};
    RatesConfig rates;
    DistributionFamily family = DistributionFamily::Normal;
    DeparturePolicy policy = DeparturePolicy::random();
    /// Hard cap on events per trajectory; exceeding it is a NumericalError.
    std::uint64_t max_events = 2'000'000'000ULL;

    ValueDistribution distribution() const { return {family, rates.sigma2}; }

    /// Rejects rates that the mode does not use (e.g. lambda_a in fixed-size
    /// mode) and invalid sizes. Throws ConfigError.
    void validate() const;
};

struct ScheduledEvent {
    double dt = 0.0;
    EventType type = EventType::Gossip;
};

/// Total event rate at size n.
double total_rate(std::size_t n, const SimMode& mode, const RatesConfig& rates);

/// Waiting time and type of the next event, or nullopt when the total rate
/// is zero (the system is absorbed and no further event occurs).
std::optional<ScheduledEvent> next_event(std::size_t n, const SimMode& mode, const RatesConfig& rates,
                                         RandomSource& rng);

/// One event as it happened.
struct LoggedEvent {
    double time = 0.0;
    EventType type = EventType::Gossip;
    /// Gossip: the two agents (possibly equal). Arrival: the newcomer.
    /// Departure: the leaver. Replacement: leaver then newcomer.
    std::vector<AgentId> ids;
};

/// Stateful single-run simulator. Draws the initial state on construction.
class Simulator {
public:
    Simulator(SimulationSpec spec, RandomSource rng);

    const SystemState& state() const { return state_; }
    double time() const { return state_.time(); }
    std::uint64_t event_count() const { return events_; }

    /// Draws the next event (if not already drawn) and returns its absolute
    /// time; nullopt when the system is absorbed.
    std::optional<double> next_event_time();

    /// Applies the event previously returned by next_event_time().
    LoggedEvent fire();

private:
    SimulationSpec spec_;
    ValueDistribution dist_;
    RandomSource rng_;
    SystemState state_;
    std::optional<ScheduledEvent> pending_;
    bool pending_valid_ = false;
    std::uint64_t events_ = 0;
};

/// Validated increasing grid inside [0, t_end].
std::vector<double> make_grid(double t_end, std::size_t points);
void validate_grid(std::span<const double> grid, double t_end);

struct GridRecord {
    double t = 0.0;
    std::size_t n = 0;
    std::optional<Descriptors> descriptors;
    /// Filled only when TrajectoryOptions::snapshot_values is set.
    std::vector<Agent> agents;
};

struct Trajectory {
    std::vector<GridRecord> records;
    std::vector<LoggedEvent> events;
    bool absorbed = false;
    double absorbed_at = 0.0;
    std::uint64_t event_count = 0;
};

struct TrajectoryOptions {
    bool log_events = false;
    bool snapshot_values = false;
};

Trajectory run_trajectory(const SimulationSpec& spec, double t_end, std::span<const double> grid,
                          std::uint64_t seed, std::uint64_t stream = 0, TrajectoryOptions options = {});

// ---------------------------------------------------------------------------
// Ensembles

/// Streaming mean / variance accumulator (Chan et al. pairwise merge).
struct RunningStat {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x);
    void merge(const RunningStat& other);
    /// Standard error of the mean; NaN when count < 2.
    double std_error() const;
    /// Unbiased sample variance; NaN when count < 2.
    double sample_variance() const;
};

/// Statistics of the descriptors restricted to replications with n(t) = size.
struct ConditionedStats {
    std::size_t size = 0;
    RunningStat squared_mean;
    RunningStat mean_of_squares;
    RunningStat variance;
};

struct GridStats {
    double t = 0.0;
    /// Replications with n >= 1 at this time; descriptor statistics are
    /// occupancy-weighted, i.e. conditioned on a non-empty system.
    RunningStat squared_mean;
    RunningStat mean_of_squares;
    RunningStat variance;
    RunningStat size;
    /// size_histogram[j] = replications with n(t) = j.
    std::vector<std::uint64_t> size_histogram;
    /// One entry per size j >= 1 with at least one replication.
    std::vector<ConditionedStats> conditioned;

    std::uint64_t defined_count() const { return variance.count; }
};

struct EnsembleStats {
    std::vector<GridStats> points;
    std::uint64_t replications = 0;
    std::uint64_t absorbed_replications = 0;
};

struct ParallelOptions {
    /// 0 = std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Replications per work unit. Results do not depend on this value's
    /// interaction with the thread count, only on the value itself.
    std::size_t chunk = 64;
};

/// Replication r uses stream r. Results are bit-identical for any thread
/// count: chunks are reduced strictly in index order.
EnsembleStats run_ensemble(const SimulationSpec& spec, double t_end, std::span<const double> grid,
                           std::uint64_t replications, std::uint64_t seed, ParallelOptions parallel = {});

struct AsymptoticEstimate {
    /// Occupancy-weighted time-and-ensemble average of Var over
    /// [burn_in, t_end], i.e. the mean variance given n >= 1.
    double estimate = 0.0;
    double std_error = 0.0;
    /// Same average with the empty system counted as zero variance.
    double unconditional = 0.0;
    double unconditional_std_error = 0.0;
    /// Fraction of window time with n >= 1.
    double occupancy = 0.0;
    std::uint64_t replications = 0;
};

/// Throws NumericalError if the system is empty over the whole window in
/// every replication.
AsymptoticEstimate estimate_asymptotic_variance(const SimulationSpec& spec, double burn_in, double t_end,
                                                std::uint64_t replications, std::uint64_t seed,
                                                ParallelOptions parallel = {});

/// 10 / min of the rates that drive relaxation.
double default_burn_in(const SimMode& mode, const RatesConfig& rates);

}  // namespace opengossip
