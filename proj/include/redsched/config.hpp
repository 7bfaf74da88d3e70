#pragma once

#include "redsched/distributions.hpp"
#include "redsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace redsched {

// One simulated scenario: N servers, d replicas per job, scale K, Poisson
// arrival rate given either absolutely or relative to K.
struct ScenarioConfig {
    int servers = 2;   // N
    int replicas = 2;  // d
    double scale = 1.0;  // K
    std::optional<double> arrival_rate;           // lambda
    std::optional<double> arrival_rate_over_scale;  // lambda / K
    XSpec x = XSpec::deterministic();
    double horizon = 1.0e4;
    std::optional<double> warmup_time;  // defaults to 10% of the horizon
    std::vector<std::uint64_t> seeds{1};
    std::optional<std::vector<double>> initial_state;  // empty state when unset

    double lambda() const {
        if (arrival_rate) return *arrival_rate;
        if (arrival_rate_over_scale) return *arrival_rate_over_scale * scale;
        throw ConfigError("neither lambda nor lambda_over_K is set");
    }
    double warmup() const { return warmup_for(horizon); }
    // Warmup for a run over `run_horizon`; an explicit warmup is capped at it.
    double warmup_for(double run_horizon) const {
        return std::min(warmup_time.value_or(0.1 * run_horizon), run_horizon);
    }
    ServiceSpec service() const { return ServiceSpec(x, scale); }

    std::vector<double> initial_workloads() const {
        if (initial_state) return *initial_state;
        return std::vector<double>(static_cast<std::size_t>(servers), 0.0);
    }

    void validate() const;
};

// True iff the d largest entries are all equal (exact comparison).
inline bool top_d_equal(const std::vector<double>& omega, int d) {
    if (omega.empty()) return true;
    const double top = *std::max_element(omega.begin(), omega.end());
    const auto at_top = std::count(omega.begin(), omega.end(), top);
    return at_top >= d;
}

inline void ScenarioConfig::validate() const {
    if (servers < 1) throw ConfigError("N must be >= 1");
    if (replicas < 1) throw ConfigError("d must be >= 1");
    if (replicas > servers) {
        throw ConfigError("d (" + std::to_string(replicas) + ") exceeds N (" +
                          std::to_string(servers) + ")");
    }
    if (!(scale >= 1.0) || !std::isfinite(scale)) throw ConfigError("K must be a finite real >= 1");
    if (arrival_rate.has_value() == arrival_rate_over_scale.has_value()) {
        throw ConfigError("exactly one of lambda and lambda_over_K must be set");
    }
    const double rate = lambda();
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("lambda must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be >= 0");
    if (warmup_time && (!(*warmup_time >= 0.0) || *warmup_time > horizon))
        throw ConfigError("warmup must lie in [0, horizon]");
    if (initial_state) {
        if (static_cast<int>(initial_state->size()) != servers) {
            throw ConfigError("initial state must have N entries");
        }
        for (double w : *initial_state) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("initial workloads must be finite and >= 0");
        }
        if (!top_d_equal(*initial_state, replicas)) {
            throw ConfigError("initial state is not in the truncated space (top d workloads differ)");
        }
    }
}

}  // namespace redsched
