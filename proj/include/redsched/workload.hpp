#pragma once

// Workload recursion of the cancel-on-completion redundancy-d system and an
// arrival-to-arrival simulator built on it.

#include "redsched/config.hpp"
#include "redsched/errors.hpp"
#include "redsched/stochastics.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace redsched {

struct WorkloadState {
    std::vector<double> omega;  // per-server remaining work
    double clock = 0.0;

    static WorkloadState empty(int servers) {
        return {std::vector<double>(static_cast<std::size_t>(servers), 0.0), 0.0};
    }
};

inline double max_workload(std::span<const double> omega) {
    double top = 0.0;
    for (double w : omega) top = std::max(top, w);
    return top;
}

// Sum over servers of (max workload - workload). Each term is computed
// separately so the result is zero exactly when all entries are equal.
inline double surplus(std::span<const double> omega) {
    const double top = max_workload(omega);
    double s = 0.0;
    for (double w : omega) s += top - w;
    return s;
}
inline double surplus(const WorkloadState& s) { return surplus(s.omega); }

inline bool is_synchronized(std::span<const double> omega) {
    return std::adjacent_find(omega.begin(), omega.end(), std::not_equal_to<>{}) == omega.end();
}
inline bool is_synchronized(const WorkloadState& s) { return is_synchronized(s.omega); }

inline bool in_truncated_space(std::span<const double> omega, int d) {
    if (omega.empty()) return true;
    const double top = max_workload(omega);
    return std::count(omega.begin(), omega.end(), top) >= d;
}
inline bool in_truncated_space(const WorkloadState& s, int d) { return in_truncated_space(s.omega, d); }

// Server indices in descending workload order, ties by ascending index.
inline void descending_order(std::span<const double> omega, std::vector<int>& order) {
    order.resize(omega.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double wa = omega[static_cast<std::size_t>(a)];
        const double wb = omega[static_cast<std::size_t>(b)];
        return wa > wb || (wa == wb && a < b);
    });
}
inline std::vector<int> descending_order(std::span<const double> omega) {
    std::vector<int> order;
    descending_order(omega, order);
    return order;
}

inline void drain(WorkloadState& s, double delta) {
    if (!(delta >= 0.0)) throw ConfigError("drain interval must be >= 0");
    for (double& w : s.omega) w = std::max(w - delta, 0.0);
    s.clock += delta;
}

// Time spent synchronized during the next `delta` of drain, starting from
// `s`. Gaps between positive workloads are invariant under drain, so an
// unsynchronized state only synchronizes when its maximum reaches zero.
inline double sync_time_in_interval(std::span<const double> omega, double delta) {
    if (is_synchronized(omega)) return delta;
    return std::max(0.0, delta - max_workload(omega));
}
inline double sync_time_in_interval(const WorkloadState& s, double delta) {
    return sync_time_in_interval(s.omega, delta);
}

struct JobOutcome {
    double latency = 0.0;  // T
    double waiting = 0.0;  // W = T - min_j b_j
    int completing_server = -1;
    JobTag tag = JobTag::C;
};

inline void check_servers(std::span<const int> servers, std::size_t n) {
    for (std::size_t j = 0; j < servers.size(); ++j) {
        if (servers[j] < 0 || static_cast<std::size_t>(servers[j]) >= n) {
            throw ConfigError("server index " + std::to_string(servers[j]) + " out of range");
        }
        for (std::size_t k = 0; k < j; ++k) {
            if (servers[k] == servers[j]) {
                throw ConfigError("server index " + std::to_string(servers[j]) + " sampled twice");
            }
        }
    }
}

// Places one job with requirements reqs[j] on servers[j]. The first replica
// to finish defines T; every sampled server ends up busy until at least T.
inline JobOutcome apply_arrival(WorkloadState& s, std::span<const int> servers,
                                std::span<const double> reqs) {
    if (servers.size() != reqs.size() || servers.empty()) {
        throw ConfigError("servers and requirements must be non-empty and of equal length");
    }
    check_servers(servers, s.omega.size());
    double t = std::numeric_limits<double>::infinity();
    double min_b = std::numeric_limits<double>::infinity();
    int winner = -1;
    for (std::size_t j = 0; j < servers.size(); ++j) {
        if (!(reqs[j] >= 0.0)) throw ConfigError("service requirements must be >= 0");
        const double finish = s.omega[static_cast<std::size_t>(servers[j])] + reqs[j];
        if (finish < t) {
            t = finish;
            winner = servers[j];
        }
        min_b = std::min(min_b, reqs[j]);
    }
    for (int server : servers) {
        double& w = s.omega[static_cast<std::size_t>(server)];
        w = std::max(t, w);
    }
    return {t, t - min_b, winner, classify_job(reqs)};
}

// Long-run statistics of one run. Times and job statistics only cover the
// measurement window [warmup, horizon].
struct SimMetrics {
    double time_in_sync = 0.0;
    double total_time = 0.0;
    std::array<std::uint64_t, 4> jobs{};  // indexed by JobTag
    double sum_waiting = 0.0;
    double sum_latency = 0.0;
    double sum_min_service = 0.0;  // sum of T - W
    double sum_max_at_arrival = 0.0;
    double final_max = 0.0;
    // Pre-arrival maximum workload at every `max_sample_stride`-th measured
    // arrival; empty unless requested.
    std::vector<double> max_samples;

    std::uint64_t job_count() const { return jobs[0] + jobs[1] + jobs[2] + jobs[3]; }
    std::uint64_t count(JobTag tag) const { return jobs[static_cast<std::size_t>(tag)]; }

    double sync_fraction() const { return total_time > 0.0 ? time_in_sync / total_time : 1.0; }
    double mean_waiting() const { return ratio(sum_waiting); }
    double mean_latency() const { return ratio(sum_latency); }
    double mean_latency_minus_waiting() const { return ratio(sum_min_service); }
    double mean_max_workload() const { return ratio(sum_max_at_arrival); }

    // Associative merge; means of the result are job- or time-weighted.
    void merge(const SimMetrics& other) {
        time_in_sync += other.time_in_sync;
        total_time += other.total_time;
        for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i] += other.jobs[i];
        sum_waiting += other.sum_waiting;
        sum_latency += other.sum_latency;
        sum_min_service += other.sum_min_service;
        sum_max_at_arrival += other.sum_max_at_arrival;
        final_max = std::max(final_max, other.final_max);
        max_samples.insert(max_samples.end(), other.max_samples.begin(), other.max_samples.end());
    }

private:
    double ratio(double sum) const {
        const auto n = job_count();
        return n > 0 ? sum / static_cast<double>(n) : 0.0;
    }
};

// Adds the part of [start, end] inside the measurement window. The state is
// synchronized from start + sync_offset on (sync_offset is +inf if never).
inline void account_interval(SimMetrics& m, double start, double end, double sync_offset,
                             double window_start) {
    const double lo = std::max(start, window_start);
    if (!(end > lo)) return;
    m.total_time += end - lo;
    const double sync_from = std::max(lo, start + sync_offset);
    if (end > sync_from) m.time_in_sync += end - sync_from;
}

// Offset into a drain interval after which the original system is
// synchronized.
inline double sync_offset(std::span<const double> omega) {
    return is_synchronized(omega) ? 0.0 : max_workload(omega);
}

struct SimulationOptions {
    // Record every k-th pre-arrival maximum (0 disables recording).
    std::size_t max_sample_stride = 0;
};

inline SimMetrics run_simulation(const ScenarioConfig& config, std::uint64_t seed, double horizon,
                                 const SimulationOptions& options = {}) {
    config.validate();
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    const double warmup = config.warmup_for(horizon);
    EventStream stream(config, seed, horizon, StreamKind::Uniform);
    WorkloadState state{config.initial_workloads(), 0.0};
    SimMetrics m;
    ArrivalEvent ev;
    std::size_t measured = 0;
    while (stream.next(ev)) {
        const double start = state.clock;
        account_interval(m, start, ev.time, sync_offset(state.omega), warmup);
        drain(state, ev.time - start);
        state.clock = ev.time;
        const double top = max_workload(state.omega);
        const JobOutcome out = apply_arrival(state, ev.slots, ev.requirements);
        if (ev.time >= warmup) {
            ++m.jobs[static_cast<std::size_t>(out.tag)];
            m.sum_waiting += out.waiting;
            m.sum_latency += out.latency;
            m.sum_min_service += out.latency - out.waiting;
            m.sum_max_at_arrival += top;
            if (options.max_sample_stride > 0 && measured % options.max_sample_stride == 0) {
                m.max_samples.push_back(top);
            }
            ++measured;
        }
    }
    account_interval(m, state.clock, horizon, sync_offset(state.omega), warmup);
    drain(state, horizon - state.clock);
    m.final_max = max_workload(state.omega);
    return m;
}

inline SimMetrics run_simulation(const ScenarioConfig& config, std::uint64_t seed,
                                 const SimulationOptions& options = {}) {
    return run_simulation(config, seed, config.horizon, options);
}

}  // namespace redsched
