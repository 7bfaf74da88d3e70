#pragma once

// Empirical stability detection from the drift of the maximum workload, and
// scans over arrival rates that locate the capacity.

#include "redsched/bounds.hpp"
#include "redsched/config.hpp"
#include "redsched/errors.hpp"
#include "redsched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace redsched {

enum class Verdict { Stable, Unstable, Inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct StabilityVerdict {
    double lambda_tested = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    double first_half_mean_max = 0.0;
    double second_half_mean_max = 0.0;
    double final_max = 0.0;
};

inline constexpr std::size_t kMinVerdictSamples = 10000;

// Stable: second-half mean <= 1.2 x first-half mean and the final maximum
// stays below 10 K max(1, reference_mean). Unstable: second-half mean >=
// 1.5 x first-half mean and final maximum above 10 K. Anything else is
// inconclusive. `reference_mean` is the P-K mean of the comparison queue when
// the sufficient condition holds (pass 0 otherwise).
inline StabilityVerdict verdict(std::span<const double> samples, double scale, double reference_mean,
                                double lambda_tested = 0.0) {
    if (samples.size() < kMinVerdictSamples) {
        throw ConfigError("drift detection needs at least " + std::to_string(kMinVerdictSamples) +
                          " samples, got " + std::to_string(samples.size()));
    }
    const std::size_t half = samples.size() / 2;
    double first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < half; ++i) first += samples[i];
    for (std::size_t i = half; i < samples.size(); ++i) second += samples[i];
    first /= static_cast<double>(half);
    second /= static_cast<double>(samples.size() - half);

    StabilityVerdict v;
    v.lambda_tested = lambda_tested;
    v.first_half_mean_max = first;
    v.second_half_mean_max = second;
    v.final_max = samples.back();
    const double stable_cap = 10.0 * scale * std::max(1.0, reference_mean);
    if (second <= 1.2 * first && v.final_max <= stable_cap) {
        v.verdict = Verdict::Stable;
    } else if (second >= 1.5 * first && v.final_max > 10.0 * scale) {
        v.verdict = Verdict::Unstable;
    } else {
        v.verdict = Verdict::Inconclusive;
    }
    return v;
}

struct ScanOptions {
    double horizon = 1.0e5;
    std::uint64_t seed = 1;
    // Aim for about this many recorded pre-arrival maxima per run.
    std::size_t target_samples = 200000;
};

struct ScanResult {
    std::vector<StabilityVerdict> verdicts;  // sorted by lambda
    std::optional<double> capacity_estimate;
    double analytical_capacity = 0.0;
    bool all_inconclusive = false;
};

inline double reference_mean_at(const ScenarioConfig& config) {
    const StabilityReport s = sufficient_condition(config);
    if (!s.sufficient_stable) return 0.0;
    return waiting_time_upper_bound(config);
}

// Simulates the scenario at one arrival rate and classifies the drift.
inline StabilityVerdict test_lambda(const ScenarioConfig& base, double lambda, const ScanOptions& options) {
    ScenarioConfig c = base;
    c.arrival_rate = lambda;
    c.arrival_rate_over_scale.reset();
    c.horizon = options.horizon;
    const double window = options.horizon - c.warmup_for(options.horizon);
    const double expected = lambda * window;
    SimulationOptions sim;
    sim.max_sample_stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(expected / static_cast<double>(options.target_samples)));
    const SimMetrics m = run_simulation(c, options.seed, sim);
    return verdict(m.max_samples, c.scale, reference_mean_at(c), lambda);
}

namespace detail {

inline void finish_scan(ScanResult& r) {
    std::sort(r.verdicts.begin(), r.verdicts.end(),
              [](const auto& a, const auto& b) { return a.lambda_tested < b.lambda_tested; });
    r.all_inconclusive = std::all_of(r.verdicts.begin(), r.verdicts.end(),
                                     [](const auto& v) { return v.verdict == Verdict::Inconclusive; });
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : r.verdicts) {
        if (s.verdict != Verdict::Stable) continue;
        for (const auto& u : r.verdicts) {
            if (u.verdict != Verdict::Unstable || u.lambda_tested <= s.lambda_tested) continue;
            const double width = u.lambda_tested - s.lambda_tested;
            if (width < best) {
                best = width;
                r.capacity_estimate = 0.5 * (s.lambda_tested + u.lambda_tested);
            }
        }
    }
}

}  // namespace detail

// Grid scan: one verdict per arrival rate. The capacity estimate is the
// midpoint of the closest (stable, unstable) pair with the stable rate below.
inline ScanResult stability_scan(const ScenarioConfig& config, std::span<const double> lambdas,
                                 const ScanOptions& options = {}) {
    if (lambdas.empty()) throw ConfigError("stability scan needs at least one arrival rate");
    ScanResult r;
    r.analytical_capacity = sufficient_condition(config).capacity_estimate;
    for (double lambda : lambdas) r.verdicts.push_back(test_lambda(config, lambda, options));
    detail::finish_scan(r);
    return r;
}

// Bisection between a stable lower and an unstable upper rate. Stops early at
// the first inconclusive midpoint.
inline ScanResult stability_scan_bisect(const ScenarioConfig& config, double lo, double hi, int iterations,
                                        const ScanOptions& options = {}) {
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("bisection bracket must satisfy 0 < lo < hi");
    ScanResult r;
    r.analytical_capacity = sufficient_condition(config).capacity_estimate;
    const StabilityVerdict vlo = test_lambda(config, lo, options);
    const StabilityVerdict vhi = test_lambda(config, hi, options);
    r.verdicts = {vlo, vhi};
    if (vlo.verdict == Verdict::Stable && vhi.verdict == Verdict::Unstable) {
        for (int i = 0; i < iterations; ++i) {
            const double mid = 0.5 * (lo + hi);
            const StabilityVerdict v = test_lambda(config, mid, options);
            r.verdicts.push_back(v);
            if (v.verdict == Verdict::Stable) {
                lo = mid;
            } else if (v.verdict == Verdict::Unstable) {
                hi = mid;
            } else {
                break;
            }
        }
    }
    detail::finish_scan(r);
    return r;
}

inline void write_scan_csv(const ScanResult& r, std::ostream& out) {
    out << "lambda,verdict,first_half_mean_max,second_half_mean_max,final_max\n";
    out.precision(12);
    for (const auto& v : r.verdicts) {
        out << v.lambda_tested << ',' << to_string(v.verdict) << ',' << v.first_half_mean_max << ','
            << v.second_half_mean_max << ',' << v.final_max << '\n';
    }
}

}  // namespace redsched
