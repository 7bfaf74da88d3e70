#pragma once

// The auxiliary system (drain frozen outside synchronicity, type-A jobs forced
// onto the top d ordered servers, only B1 jobs among type-B jobs) and the
// coupled run that drives it, the original system and the M/G/1 comparison
// queue off one marked event stream.

#include "redsched/config.hpp"
#include "redsched/errors.hpp"
#include "redsched/stochastics.hpp"
#include "redsched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace redsched {

struct AuxState {
    std::vector<double> omega;
    double clock = 0.0;

    static AuxState empty(int servers) {
        return {std::vector<double>(static_cast<std::size_t>(servers), 0.0), 0.0};
    }
};

inline double surplus(const AuxState& s) { return surplus(std::span<const double>(s.omega)); }
inline bool is_synchronized(const AuxState& s) { return is_synchronized(std::span<const double>(s.omega)); }

inline void aux_drain(AuxState& s, double delta) {
    if (!(delta >= 0.0)) throw ConfigError("drain interval must be >= 0");
    if (is_synchronized(s)) {
        for (double& w : s.omega) w = std::max(w - delta, 0.0);
    }
    s.clock += delta;
}

namespace detail {

// Raises the d top servers (all at the maximum) by `increment`.
inline void aux_raise_top(AuxState& s, double increment, int d) {
    if (!in_truncated_space(s.omega, d)) {
        throw std::logic_error("auxiliary state left the truncated space before a type-A job");
    }
    const double top = max_workload(s.omega);
    const double raised = top + increment;
    int remaining = d;
    for (double& w : s.omega) {
        if (remaining == 0) break;
        if (w == top) {
            w = raised;
            --remaining;
        }
    }
}

// Places `amount` on the least loaded server, ties to the highest index (the
// last position of the descending order). Returns the surplus reduction.
inline double aux_raise_lowest(AuxState& s, double amount) {
    const double top = max_workload(s.omega);
    std::size_t lowest = 0;
    for (std::size_t i = 0; i < s.omega.size(); ++i) {
        if (s.omega[i] <= s.omega[lowest]) lowest = i;
    }
    const double before = s.omega[lowest];
    s.omega[lowest] = std::min(top, before + amount);
    return s.omega[lowest] - before;
}

}  // namespace detail

inline void aux_apply_type_a(AuxState& s, std::span<const double> x_values, double scale, int d) {
    if (x_values.empty()) throw ConfigError("type-A job needs at least one replica");
    const double min_x = *std::min_element(x_values.begin(), x_values.end());
    detail::aux_raise_top(s, min_x * scale, d);
}

inline void aux_apply_type_b1(AuxState& s, double x_last, double scale) {
    detail::aux_raise_lowest(s, x_last * scale);
}

inline void account_aux_interval(SimMetrics& m, const AuxState& s, double start, double end,
                                 double window_start) {
    account_interval(m, start, end,
                     is_synchronized(s) ? 0.0 : std::numeric_limits<double>::infinity(),
                     window_start);
}

// Runs the auxiliary system alone over a coupled stream. Only type-A and B1
// marks act on it; all other arrivals are counted but otherwise ignored.
inline SimMetrics run_auxiliary(const ScenarioConfig& config, EventStream& stream, AuxState initial) {
    if (stream.kind() != StreamKind::Coupled) throw ConfigError("the auxiliary system needs a coupled stream");
    if (static_cast<int>(initial.omega.size()) != config.servers) {
        throw ConfigError("initial auxiliary state must have N entries");
    }
    if (!in_truncated_space(initial.omega, config.replicas)) {
        throw ConfigError("initial auxiliary state is not in the truncated space");
    }
    const double horizon = stream.horizon();
    const double warmup = config.warmup_for(horizon);
    AuxState s = std::move(initial);
    SimMetrics m;
    ArrivalEvent ev;
    while (stream.next(ev)) {
        account_aux_interval(m, s, s.clock, ev.time, warmup);
        aux_drain(s, ev.time - s.clock);
        s.clock = ev.time;
        if (ev.time >= warmup) ++m.jobs[static_cast<std::size_t>(ev.tag)];
        if (ev.tag == JobTag::A) {
            detail::aux_raise_top(s, *std::min_element(ev.requirements.begin(), ev.requirements.end()),
                                  config.replicas);
        } else if (ev.tag == JobTag::B1) {
            detail::aux_raise_lowest(s, ev.requirements.back());
        }
    }
    account_aux_interval(m, s, s.clock, horizon, warmup);
    aux_drain(s, horizon - s.clock);
    m.final_max = max_workload(s.omega);
    return m;
}

struct CoupledRecord {
    std::size_t index = 0;
    double time = 0.0;
    JobTag tag = JobTag::C;
    std::vector<double> original_sorted;   // descending
    std::vector<double> auxiliary_sorted;  // descending
    double mg1_workload = 0.0;
    double surplus = 0.0;
    double aux_surplus = 0.0;
    bool max_bounded = true;  // original max <= M/G/1 workload
    bool gaps_dominated = true;  // auxiliary gaps >= original gaps
};

struct CoupledSummary {
    std::size_t events = 0;
    std::size_t max_violations = 0;
    std::size_t gap_violations = 0;
    std::size_t jump_rule_violations = 0;
    std::size_t surplus_violations = 0;  // auxiliary surplus below original surplus
    std::optional<std::string> first_violation;

    bool passed() const { return max_violations == 0 && gap_violations == 0; }
};

struct CoupledResult {
    SimMetrics original;
    SimMetrics auxiliary;
    CoupledSummary summary;
    std::vector<CoupledRecord> trace;
    std::vector<double> final_original;
    std::vector<double> final_auxiliary;
    double final_mg1 = 0.0;
};

struct CoupledOptions {
    std::size_t max_events = std::numeric_limits<std::size_t>::max();
    bool record_trace = false;
    bool check_dominance = true;
    // Throw PropertyViolation on the first violated dominance relation.
    bool strict = false;
    // Relative slack for the gap comparison. Drain subtracts the same delta
    // from every entry, so gap differences carry rounding of order 1 ulp of
    // the largest workload.
    double gap_tolerance = 1e-9;
};

namespace detail {

inline std::string dump_state(std::string_view label, std::span<const double> omega) {
    std::ostringstream os;
    os.precision(17);
    os << label << "=(";
    for (std::size_t i = 0; i < omega.size(); ++i) os << (i ? ", " : "") << omega[i];
    os << ")";
    return os.str();
}

inline void sorted_desc(std::span<const double> omega, std::vector<double>& out) {
    out.assign(omega.begin(), omega.end());
    std::sort(out.begin(), out.end(), std::greater<>{});
}

}  // namespace detail

// Drives the original system, the auxiliary system and the M/G/1 comparison
// queue off one coupled stream and checks, after every event, that the
// original maximum stays below the M/G/1 workload and that every auxiliary
// gap max - omega_(i) dominates the original one.
inline CoupledResult run_coupled(const ScenarioConfig& config, std::uint64_t seed, double horizon,
                                 const CoupledOptions& options = {}) {
    config.validate();
    const std::vector<double> initial = config.initial_workloads();
    if (!in_truncated_space(initial, config.replicas)) {
        throw ConfigError("coupled runs must start in the truncated space");
    }
    const int n = config.servers;
    const int d = config.replicas;
    const double warmup = config.warmup_for(horizon);

    WorkloadState orig{initial, 0.0};
    AuxState aux{initial, 0.0};
    double mg1 = max_workload(initial);
    double clock = 0.0;

    CoupledResult result;
    CoupledSummary& summary = result.summary;
    std::vector<int> order;
    std::vector<int> servers(static_cast<std::size_t>(d));
    std::vector<double> orig_sorted, aux_sorted;

    auto violation = [&](std::size_t index, const std::string& what) {
        if (!summary.first_violation) {
            summary.first_violation = "event " + std::to_string(index) + ": " + what + "; " +
                                      detail::dump_state("original", orig.omega) + " " +
                                      detail::dump_state("auxiliary", aux.omega) +
                                      " mg1=" + std::to_string(mg1);
        }
        if (options.strict) throw PropertyViolation(*summary.first_violation);
    };

    if (horizon > 0.0) {
        EventStream stream(config, seed, horizon, StreamKind::Coupled, options.max_events);
        ArrivalEvent ev;
        while (stream.next(ev)) {
            const double delta = ev.time - clock;
            account_interval(result.original, clock, ev.time, sync_offset(orig.omega), warmup);
            account_aux_interval(result.auxiliary, aux, clock, ev.time, warmup);
            drain(orig, delta);
            aux_drain(aux, delta);
            mg1 = std::max(mg1 - delta, 0.0);
            clock = ev.time;
            orig.clock = aux.clock = clock;
            if (ev.time >= warmup) {
                ++result.original.jobs[static_cast<std::size_t>(ev.tag)];
                ++result.auxiliary.jobs[static_cast<std::size_t>(ev.tag)];
            }

            const double min_b = *std::min_element(ev.requirements.begin(), ev.requirements.end());

            // Original system. Type-C jobs add no work anywhere.
            if (ev.tag != JobTag::C) {
                if (ev.placement == Placement::Servers) {
                    apply_arrival(orig, ev.slots, ev.requirements);
                } else {
                    descending_order(orig.omega, order);
                    for (std::size_t j = 0; j < servers.size(); ++j) {
                        servers[j] = order[static_cast<std::size_t>(ev.slots[j])];
                    }
                    apply_arrival(orig, servers, ev.requirements);
                }
            }

            // Auxiliary system, with its surplus jump rules checked in place.
            const double aux_before = surplus(aux);
            double expected_change = 0.0;
            if (ev.tag == JobTag::A) {
                detail::aux_raise_top(aux, min_b, d);
                expected_change = (n - d) * min_b;
            } else if (ev.tag == JobTag::B1) {
                const double gap = max_workload(aux.omega) -
                                   *std::min_element(aux.omega.begin(), aux.omega.end());
                detail::aux_raise_lowest(aux, ev.requirements.back());
                expected_change = -std::min(gap, ev.requirements.back());
            }
            const double aux_after = surplus(aux);

            mg1 += min_b;
            const std::size_t index = summary.events++;

            if (options.check_dominance) {
                const double top = max_workload(orig.omega);
                const bool max_ok = top <= mg1;
                detail::sorted_desc(orig.omega, orig_sorted);
                detail::sorted_desc(aux.omega, aux_sorted);
                const double tol =
                    options.gap_tolerance * std::max({1.0, orig_sorted.front(), aux_sorted.front()});
                bool gaps_ok = true;
                for (std::size_t i = 0; i < orig_sorted.size(); ++i) {
                    const double g_aux = aux_sorted.front() - aux_sorted[i];
                    const double g_orig = orig_sorted.front() - orig_sorted[i];
                    if (g_aux < g_orig - tol) gaps_ok = false;
                }
                const double orig_surplus = surplus(orig);
                if (aux_after < orig_surplus - n * tol) ++summary.surplus_violations;
                if (std::abs((aux_after - aux_before) - expected_change) >
                    n * tol + 1e-12 * std::abs(expected_change)) {
                    ++summary.jump_rule_violations;
                }
                if (!max_ok) {
                    ++summary.max_violations;
                    violation(index, "original maximum exceeds the M/G/1 workload");
                }
                if (!gaps_ok) {
                    ++summary.gap_violations;
                    violation(index, "an auxiliary gap is below the original gap");
                }
                if (options.record_trace) {
                    result.trace.push_back({index, ev.time, ev.tag, orig_sorted, aux_sorted, mg1,
                                            orig_surplus, aux_after, max_ok, gaps_ok});
                }
            } else if (options.record_trace) {
                CoupledRecord rec{index, ev.time, ev.tag, {}, {}, mg1, surplus(orig), aux_after, true, true};
                detail::sorted_desc(orig.omega, rec.original_sorted);
                detail::sorted_desc(aux.omega, rec.auxiliary_sorted);
                result.trace.push_back(std::move(rec));
            }
        }
    }

    if (horizon > clock && summary.events < options.max_events) {
        account_interval(result.original, clock, horizon, sync_offset(orig.omega), warmup);
        account_aux_interval(result.auxiliary, aux, clock, horizon, warmup);
        const double delta = horizon - clock;
        drain(orig, delta);
        aux_drain(aux, delta);
        mg1 = std::max(mg1 - delta, 0.0);
    }
    result.original.final_max = max_workload(orig.omega);
    result.auxiliary.final_max = max_workload(aux.omega);
    result.final_original = orig.omega;
    result.final_auxiliary = aux.omega;
    result.final_mg1 = mg1;
    return result;
}

inline CoupledResult run_coupled(const ScenarioConfig& config, std::uint64_t seed,
                                 const CoupledOptions& options = {}) {
    return run_coupled(config, seed, config.horizon, options);
}

}  // namespace redsched
