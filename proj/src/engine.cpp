#include "opengossip/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace opengossip {

bool is_fixed_size(const SimMode& mode) { return std::holds_alternative<FixedSize>(mode); }

int initial_size(const SimMode& mode) {
    return std::visit(
        [](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, FixedSize>)
                return m.n;
            else
                return m.n_init;
        },
        mode);
}

void SimulationSpec::validate() const {
    rates.validate();
    if (const auto* f = std::get_if<FixedSize>(&mode)) {
        if (f->n < 1) throw ConfigError("fixed-size mode needs n >= 1");
        if (rates.lambda_a != 0.0 || rates.lambda_d != 0.0)
            throw ConfigError("fixed-size mode admits only gossip and replacement: lambda_a and lambda_d must be 0");
    } else {
        const auto& o = std::get<Open>(mode);
        if (o.n_init < 0) throw ConfigError("open mode needs n_init >= 0");
        if (rates.lambda_r != 0.0)
            throw ConfigError("open mode admits gossip, arrival and departure only: lambda_r must be 0");
    }
    if (max_events == 0) throw ConfigError("max_events must be positive");
}

double total_rate(std::size_t n, const SimMode& mode, const RatesConfig& rates) {
    const double nd = static_cast<double>(n);
    if (is_fixed_size(mode)) return nd * (rates.lambda_g + rates.lambda_r);
    return nd * rates.lambda_g + rates.lambda_a + nd * rates.lambda_d;
}

std::optional<ScheduledEvent> next_event(std::size_t n, const SimMode& mode, const RatesConfig& rates,
                                         RandomSource& rng) {
    const double total = total_rate(n, mode, rates);
    if (!(total > 0.0)) return std::nullopt;

    ScheduledEvent ev;
    ev.dt = rng.exponential(total);
    const double nd = static_cast<double>(n);
    const double u = rng.uniform01() * total;
    if (is_fixed_size(mode)) {
        ev.type = u < nd * rates.lambda_g ? EventType::Gossip : EventType::Replacement;
    } else {
        const double g = nd * rates.lambda_g;
        const double a = g + rates.lambda_a;
        if (u < g)
            ev.type = EventType::Gossip;
        else if (u < a || n == 0)
            ev.type = EventType::Arrival;
        else
            ev.type = EventType::Departure;
    }
    return ev;
}

Simulator::Simulator(SimulationSpec spec, RandomSource rng)
    : spec_(std::move(spec)), dist_(spec_.distribution()), rng_(std::move(rng)) {
    spec_.validate();
    const int n = initial_size(spec_.mode);
    for (int k = 0; k < n; ++k) state_.add(draw_initial_value(dist_, rng_));
}

std::optional<double> Simulator::next_event_time() {
    if (!pending_valid_) {
        pending_ = next_event(state_.size(), spec_.mode, spec_.rates, rng_);
        pending_valid_ = true;
    }
    if (!pending_) return std::nullopt;
    return state_.time() + pending_->dt;
}

LoggedEvent Simulator::fire() {
    if (!next_event_time()) throw DomainError("no event to fire: the system is absorbed");
    if (++events_ > spec_.max_events)
        throw NumericalError("event cap of " + std::to_string(spec_.max_events) + " exceeded");

    LoggedEvent log;
    log.time = state_.time() + pending_->dt;
    log.type = pending_->type;
    pending_valid_ = false;
    state_.set_time(log.time);

    switch (log.type) {
        case EventType::Gossip: {
            const auto g = perform_gossip(state_, rng_);
            log.ids = {g.id_i, g.id_j};
            break;
        }
        case EventType::Arrival:
            log.ids = {perform_arrival(state_, dist_, rng_)};
            break;
        case EventType::Departure:
            log.ids = {perform_departure(state_, spec_.policy, rng_).id};
            break;
        case EventType::Replacement: {
            const auto r = perform_replacement(state_, spec_.policy, dist_, rng_);
            log.ids = {r.departed.id, r.arrived};
            break;
        }
    }
    return log;
}

std::vector<double> make_grid(double t_end, std::size_t points) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive and finite");
    if (points < 2) throw ConfigError("a time grid needs at least 2 points");
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k)
        grid[k] = t_end * static_cast<double>(k) / static_cast<double>(points - 1);
    grid.back() = t_end;
    return grid;
}

void validate_grid(std::span<const double> grid, double t_end) {
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (grid.empty()) throw ConfigError("empty time grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0 && grid[k] <= t_end)) throw ConfigError("grid times must lie in [0, t_end]");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw ConfigError("grid times must be strictly increasing");
    }
}

Trajectory run_trajectory(const SimulationSpec& spec, double t_end, std::span<const double> grid,
                          std::uint64_t seed, std::uint64_t stream, TrajectoryOptions options) {
    validate_grid(grid, t_end);
    Simulator sim(spec, RandomSource(seed, stream));
    Trajectory traj;
    traj.records.reserve(grid.size());

    std::size_t k = 0;
    while (k < grid.size()) {
        const auto te = sim.next_event_time();
        const double horizon = te ? *te : std::numeric_limits<double>::infinity();
        while (k < grid.size() && grid[k] <= horizon) {
            GridRecord rec;
            rec.t = grid[k];
            rec.n = sim.state().size();
            rec.descriptors = try_descriptors(sim.state());
            if (options.snapshot_values) rec.agents.assign(sim.state().agents().begin(), sim.state().agents().end());
            traj.records.push_back(std::move(rec));
            ++k;
        }
        if (!te) {
            traj.absorbed = true;
            traj.absorbed_at = sim.time();
            break;
        }
        if (*te > t_end) break;
        auto ev = sim.fire();
        if (options.log_events) traj.events.push_back(std::move(ev));
    }
    traj.event_count = sim.event_count();
    return traj;
}

// ---------------------------------------------------------------------------

void RunningStat::add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
}

void RunningStat::merge(const RunningStat& o) {
    if (o.count == 0) return;
    if (count == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double n = na + nb;
    const double delta = o.mean - mean;
    mean += delta * nb / n;
    m2 += o.m2 + delta * delta * na * nb / n;
    count += o.count;
}

double RunningStat::sample_variance() const {
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::max(0.0, m2 / static_cast<double>(count - 1));
}

double RunningStat::std_error() const {
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(sample_variance() / static_cast<double>(count));
}

namespace {

/// Runs fn(chunk) for every chunk index, on up to `threads` workers, and
/// hands each result to `consume` strictly in chunk order.
template <typename Result, typename Work, typename Consume>
void ordered_parallel_chunks(std::size_t chunks, unsigned threads, Work work, Consume consume) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(chunks, 1)));

    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) consume(work(c));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::map<std::size_t, Result> done;
    std::size_t next_to_consume = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                Result r = work(c);
                std::lock_guard lock(mu);
                if (failure) return;
                done.emplace(c, std::move(r));
                while (!done.empty() && done.begin()->first == next_to_consume) {
                    consume(std::move(done.begin()->second));
                    done.erase(done.begin());
                    ++next_to_consume;
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

struct GridAccumulator {
    RunningStat squared_mean;
    RunningStat mean_of_squares;
    RunningStat variance;
    RunningStat size;
    std::vector<std::uint64_t> histogram;
    std::vector<ConditionedStats> by_size;  // index = size

    void add(std::size_t n, const std::optional<Descriptors>& d) {
        size.add(static_cast<double>(n));
        if (histogram.size() <= n) histogram.resize(n + 1, 0);
        ++histogram[n];
        if (!d) return;
        squared_mean.add(d->squared_mean);
        mean_of_squares.add(d->mean_of_squares);
        variance.add(d->variance);
        if (by_size.size() <= n) by_size.resize(n + 1);
        auto& c = by_size[n];
        c.size = n;
        c.squared_mean.add(d->squared_mean);
        c.mean_of_squares.add(d->mean_of_squares);
        c.variance.add(d->variance);
    }

    void merge(const GridAccumulator& o) {
        squared_mean.merge(o.squared_mean);
        mean_of_squares.merge(o.mean_of_squares);
        variance.merge(o.variance);
        size.merge(o.size);
        if (histogram.size() < o.histogram.size()) histogram.resize(o.histogram.size(), 0);
        for (std::size_t j = 0; j < o.histogram.size(); ++j) histogram[j] += o.histogram[j];
        if (by_size.size() < o.by_size.size()) by_size.resize(o.by_size.size());
        for (std::size_t j = 0; j < o.by_size.size(); ++j) {
            by_size[j].size = j;
            by_size[j].squared_mean.merge(o.by_size[j].squared_mean);
            by_size[j].mean_of_squares.merge(o.by_size[j].mean_of_squares);
            by_size[j].variance.merge(o.by_size[j].variance);
        }
    }
};

struct ChunkResult {
    std::vector<GridAccumulator> grid;
    std::uint64_t absorbed = 0;
};

}  // namespace

EnsembleStats run_ensemble(const SimulationSpec& spec, double t_end, std::span<const double> grid,
                           std::uint64_t replications, std::uint64_t seed, ParallelOptions parallel) {
    if (replications == 0) throw ConfigError("replications must be >= 1");
    if (parallel.chunk == 0) throw ConfigError("chunk size must be positive");
    spec.validate();
    validate_grid(grid, t_end);

    const std::size_t chunks = (replications + parallel.chunk - 1) / parallel.chunk;
    ChunkResult total;
    total.grid.resize(grid.size());

    auto work = [&](std::size_t c) {
        ChunkResult out;
        out.grid.resize(grid.size());
        const std::uint64_t begin = c * parallel.chunk;
        const std::uint64_t end = std::min<std::uint64_t>(replications, begin + parallel.chunk);
        for (std::uint64_t r = begin; r < end; ++r) {
            const auto traj = run_trajectory(spec, t_end, grid, seed, r);
            for (std::size_t k = 0; k < grid.size(); ++k)
                out.grid[k].add(traj.records[k].n, traj.records[k].descriptors);
            if (traj.absorbed) ++out.absorbed;
        }
        return out;
    };
    auto consume = [&](ChunkResult&& r) {
        for (std::size_t k = 0; k < grid.size(); ++k) total.grid[k].merge(r.grid[k]);
        total.absorbed += r.absorbed;
    };
    ordered_parallel_chunks<ChunkResult>(chunks, parallel.threads, work, consume);

    EnsembleStats stats;
    stats.replications = replications;
    stats.absorbed_replications = total.absorbed;
    stats.points.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto& acc = total.grid[k];
        GridStats g;
        g.t = grid[k];
        g.squared_mean = acc.squared_mean;
        g.mean_of_squares = acc.mean_of_squares;
        g.variance = acc.variance;
        g.size = acc.size;
        g.size_histogram = std::move(acc.histogram);
        for (auto& c : acc.by_size)
            if (c.variance.count > 0) g.conditioned.push_back(c);
        stats.points.push_back(std::move(g));
    }
    return stats;
}

namespace {

struct WindowIntegral {
    double var_time = 0.0;       // integral of Var over occupied window time
    double occupied_time = 0.0;  // measure of {t in window : n(t) >= 1}
};

WindowIntegral integrate_variance(const SimulationSpec& spec, double burn_in, double t_end, std::uint64_t seed,
                                  std::uint64_t stream) {
    Simulator sim(spec, RandomSource(seed, stream));
    WindowIntegral acc;
    // The state is constant between events, so the integral is exact. The
    // variance is only evaluated for intervals that overlap the window.
    for (;;) {
        const double t = sim.time();
        const auto te = sim.next_event_time();
        const double t_next = te ? std::min(*te, t_end) : t_end;
        const double lo = std::max(t, burn_in);
        if (t_next > lo && !sim.state().empty()) {
            acc.var_time += compute_descriptors(sim.state()).variance * (t_next - lo);
            acc.occupied_time += t_next - lo;
        }
        if (!te || *te >= t_end) break;
        sim.fire();
    }
    return acc;
}

}  // namespace

AsymptoticEstimate estimate_asymptotic_variance(const SimulationSpec& spec, double burn_in, double t_end,
                                                std::uint64_t replications, std::uint64_t seed,
                                                ParallelOptions parallel) {
    spec.validate();
    if (replications == 0) throw ConfigError("replications must be >= 1");
    if (!(burn_in >= 0.0) || !(burn_in < t_end)) throw ConfigError("need 0 <= burn_in < t_end");
    if (parallel.chunk == 0) throw ConfigError("chunk size must be positive");

    std::vector<WindowIntegral> per_rep(replications);
    const std::size_t chunks = (replications + parallel.chunk - 1) / parallel.chunk;
    auto work = [&](std::size_t c) {
        const std::uint64_t begin = c * parallel.chunk;
        const std::uint64_t end = std::min<std::uint64_t>(replications, begin + parallel.chunk);
        for (std::uint64_t r = begin; r < end; ++r) per_rep[r] = integrate_variance(spec, burn_in, t_end, seed, r);
        return 0;
    };
    ordered_parallel_chunks<int>(chunks, parallel.threads, work, [](int) {});

    const double window = t_end - burn_in;
    const double reps = static_cast<double>(replications);
    double sum_s = 0.0;
    double sum_c = 0.0;
    RunningStat uncond;
    for (const auto& w : per_rep) {
        sum_s += w.var_time;
        sum_c += w.occupied_time;
        uncond.add(w.var_time / window);
    }
    if (!(sum_c > 0.0)) throw NumericalError("system empty over the whole averaging window in every replication");

    AsymptoticEstimate est;
    est.replications = replications;
    est.estimate = sum_s / sum_c;
    est.occupancy = sum_c / (reps * window);
    est.unconditional = uncond.mean;
    est.unconditional_std_error = uncond.std_error();
    if (replications >= 2) {
        // Delta-method standard error of the ratio estimator sum S / sum C.
        double ss = 0.0;
        for (const auto& w : per_rep) {
            const double e = w.var_time - est.estimate * w.occupied_time;
            ss += e * e;
        }
        const double mean_c = sum_c / reps;
        est.std_error = std::sqrt(ss / (reps * (reps - 1.0))) / mean_c;
    } else {
        est.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

double default_burn_in(const SimMode& mode, const RatesConfig& rates) {
    const double other = is_fixed_size(mode) ? rates.lambda_r : rates.lambda_d;
    double slowest = std::numeric_limits<double>::infinity();
    for (double r : {rates.lambda_g, other})
        if (r > 0.0) slowest = std::min(slowest, r);
    if (!std::isfinite(slowest)) return 0.0;
    return 10.0 / slowest;
}

}  // namespace opengossip
