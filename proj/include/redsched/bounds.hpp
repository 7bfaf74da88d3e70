#pragma once

// Closed-form analysis: stability conditions, the M/G/1 comparison queue and
// its Pollaczek-Khinchine mean, renewal functions, and the lower bound on the
// long-run fraction of time the auxiliary system spends synchronized.

#include "redsched/config.hpp"
#include "redsched/distributions.hpp"
#include "redsched/errors.hpp"
#include "redsched/rng.hpp"
#include "redsched/stochastics.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace redsched {

struct StabilityReport {
    double rho = 0.0;           // lambda * E[min B]
    double reduced_load = 0.0;  // lambda * E[min X] / K^(d-1)
    bool sufficient_stable = false;
    double capacity_estimate = 0.0;  // K^(d-1) / E[min X]
};

struct Mg1Params {
    double lambda_mg1 = 0.0;
    double mean_b = 0.0;
    double mean_b2 = 0.0;
};

struct BoundReport {
    double e_tau1 = 0.0;        // mean time synchronized after a synchronization
    double e_tau2_upper = 0.0;  // upper bound on the mean time out of synchronicity
    bool assumption_ok = false;
    double sync_fraction_lower = 0.0;
    double e_jumps_upper = 0.0;    // bound on the expected number of B1 jumps
    double e_upward_jumps = 0.0;   // E[Y] implied by Wald with the tau2 bound
    double surplus_used = 0.0;     // starting auxiliary surplus fed into the bound
    bool default_surplus = true;   // surplus_used is the mean post-jump surplus
};

// Evaluate closed forms for the named X kinds; Custom falls back to Monte
// Carlo when a generator is supplied.
struct McFallback {
    Rng* rng = nullptr;
    std::size_t samples = 1000000;
};

inline double min_x_mean(const XSpec& x, int d, const McFallback& mc = {}) {
    return expected_min_x(x, d, mc.rng, mc.samples).value;
}

inline StabilityReport sufficient_condition(const ScenarioConfig& config, const McFallback& mc = {}) {
    const int d = config.replicas;
    const double k = config.scale;
    const double lambda = config.lambda();
    const double emin = min_x_mean(config.x, d, mc);
    // Route 1: only type-A jobs carry a nonzero min B; E[min B] = P(A) E[min X] K.
    const auto probs = job_type_probabilities(config.service(), d);
    const double e_min_b = probs.a * emin * k;
    StabilityReport r;
    r.rho = lambda * e_min_b;
    // Route 2: the reduced form lambda E[min X] / K^(d-1).
    r.reduced_load = lambda * emin / std::pow(k, d - 1);
    r.sufficient_stable = r.rho < 1.0;
    r.capacity_estimate = std::pow(k, d - 1) / emin;
    return r;
}

// Comparison queue seen by type-A arrivals: rate (1-p)^d lambda, service
// min{X_1..X_d} K.
inline Mg1Params mg1_params(const ScenarioConfig& config, const McFallback& mc = {}) {
    const int d = config.replicas;
    const double k = config.scale;
    const double pa = std::pow(1.0 / k, d);
    return {pa * config.lambda(), expected_min_x(config.x, d, mc.rng, mc.samples).value * k,
            expected_min_x_squared(config.x, d, mc.rng, mc.samples).value * k * k};
}

// Pollaczek-Khinchine mean workload.
inline double mg1_expected_workload(const Mg1Params& p) {
    if (p.lambda_mg1 < 0.0 || p.mean_b < 0.0 || p.mean_b2 < 0.0) {
        throw DomainError("M/G/1 parameters must be nonnegative");
    }
    const double rho = p.lambda_mg1 * p.mean_b;
    if (rho >= 1.0) {
        throw DomainError("M/G/1 load " + std::to_string(rho) + " >= 1 has no stationary mean");
    }
    if (p.lambda_mg1 == 0.0) return 0.0;
    return p.lambda_mg1 * p.mean_b2 / (2.0 * (1.0 - rho));
}

inline double waiting_time_upper_bound(const ScenarioConfig& config, const McFallback& mc = {}) {
    return mg1_expected_workload(mg1_params(config, mc));
}

struct LatencyBound {
    double waiting = 0.0;
    double mean_min_service = 0.0;  // E[min B] = E[min X] K^(1-d)
    double latency = 0.0;           // waiting + mean_min_service
    double loose_latency = 0.0;     // waiting + 1, from E[min B] <= E[B] = 1
};

inline LatencyBound latency_upper_bound(const ScenarioConfig& config, const McFallback& mc = {}) {
    LatencyBound b;
    b.waiting = waiting_time_upper_bound(config, mc);
    b.mean_min_service = min_x_mean(config.x, config.replicas, mc) *
                         std::pow(config.scale, 1 - config.replicas);
    b.latency = b.waiting + b.mean_min_service;
    b.loose_latency = b.waiting + 1.0;
    return b;
}

namespace detail {

// m(t) + 1 for X ~ Unif[0,2] as the finite alternating series, summed in
// extended precision with Neumaier compensation.
inline double uniform02_renewal_series(double t) {
    const long double half = static_cast<long double>(t) / 2.0L;
    const auto last = static_cast<long>(std::floor(half));
    long double sum = 0.0L, comp = 0.0L;
    long double factorial = 1.0L;
    for (long i = 0; i <= last; ++i) {
        if (i > 0) factorial *= static_cast<long double>(i);
        const long double base = half - static_cast<long double>(i);
        const long double term = (i % 2 == 0 ? 1.0L : -1.0L) * std::pow(base, static_cast<long double>(i)) /
                                 factorial * std::exp(base);
        const long double next = sum + term;
        if (std::fabs(sum) >= std::fabs(term)) {
            comp += (sum - next) + term;
        } else {
            comp += (term - next) + sum;
        }
        sum = next;
    }
    return static_cast<double>(sum + comp);
}

}  // namespace detail

// Beyond this argument the Unif[0,2] series loses precision to cancellation;
// there m(t) equals its linear asymptote t - 1/3 to double precision.
inline constexpr double kUniformSeriesLimit = 30.0;

// Renewal function m(t) = E[max{n : S_n <= t}] for the named X kinds.
inline double renewal_function(const XSpec& x, double t) {
    if (!(t >= 0.0)) throw ConfigError("renewal function needs t >= 0");
    switch (x.kind) {
        case XKind::Deterministic1: return std::floor(t);
        case XKind::Exponential1: return t;
        case XKind::Uniform02:
            if (t > kUniformSeriesLimit) return t - 1.0 / 3.0;
            return detail::uniform02_renewal_series(t) - 1.0;
        case XKind::Custom:
            throw UnsupportedClosedForm("no closed-form renewal function for custom X; use renewal_function_mc");
    }
    return 0.0;
}

inline Estimate renewal_function_mc(const XSpec& x, double t, std::size_t n_samples, Rng& rng) {
    if (!(t >= 0.0)) throw ConfigError("renewal function needs t >= 0");
    if (n_samples < 1) throw ConfigError("renewal Monte Carlo needs at least one path");
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double partial = 0.0;
        double count = -1.0;
        while (partial <= t) {
            partial += sample_x(x, rng);
            count += 1.0;
        }
        const double delta = count - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (count - mean);
    }
    const double se =
        n_samples > 1 ? std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
    return {mean, se};
}

namespace detail {

inline double renewal_value(const XSpec& x, double t, const McFallback& mc) {
    if (x.kind != XKind::Custom) return renewal_function(x, t);
    if (mc.rng == nullptr) throw UnsupportedClosedForm("custom X needs a Monte-Carlo generator");
    return renewal_function_mc(x, t, std::min<std::size_t>(mc.samples, 100000), *mc.rng).value;
}

}  // namespace detail

// Bound on the expected number of B1 jumps to clear a surplus, starting in
// the truncated space: (N-d)(m(surplus/K) + 1). Equality holds when
// surplus/K is not an integer.
inline double expected_jumps_bound(const ScenarioConfig& config, double surplus_value,
                                   const McFallback& mc = {}) {
    if (!(surplus_value >= 0.0)) throw ConfigError("surplus must be >= 0");
    const int excess = config.servers - config.replicas;
    if (excess == 0) return 0.0;
    return excess * (detail::renewal_value(config.x, surplus_value / config.scale, mc) + 1.0);
}

// Lower bound on the long-run fraction of time the auxiliary system is
// synchronized, E[tau1] / (E[tau1] + E[tau2]). By default the starting
// surplus is (N-d) E[min X] K, the mean surplus right after the first type-A
// jump out of synchronicity.
inline BoundReport sync_fraction_bound(const ScenarioConfig& config,
                                       std::optional<double> surplus_override = std::nullopt,
                                       const McFallback& mc = {}) {
    const int n = config.servers;
    const int d = config.replicas;
    const double k = config.scale;
    const double lambda = config.lambda();
    const double emin = min_x_mean(config.x, d, mc);

    BoundReport r;
    r.e_tau1 = std::pow(k, d) / lambda;
    r.default_surplus = !surplus_override.has_value();
    r.surplus_used = surplus_override.value_or((n - d) * emin * k);
    if (r.surplus_used < 0.0) throw ConfigError("surplus must be >= 0");

    if (n == d) {
        // No positions below the top d: the auxiliary surplus never leaves 0.
        r.assumption_ok = true;
        r.e_tau2_upper = 0.0;
        r.e_jumps_upper = 0.0;
        r.e_upward_jumps = 0.0;
        r.sync_fraction_lower = 1.0;
        return r;
    }

    const double excess = n - d;
    const double m_min = detail::renewal_value(config.x, emin, mc);
    // (N-d-1)!/N! (1 - 1/K)^(d-1) > (m(E[min X]) + 1) / K^(d-1)
    const double lhs = falling_factorial_inverse(n, d) / excess * std::pow(1.0 - 1.0 / k, d - 1);
    const double rhs = (m_min + 1.0) / std::pow(k, d - 1);
    r.assumption_ok = lhs > rhs;
    r.e_jumps_upper = expected_jumps_bound(config, r.surplus_used, mc);
    if (!r.assumption_ok) return r;

    const double b1_rate = falling_factorial_inverse(n, d) * (lambda / k) * std::pow(1.0 - 1.0 / k, d - 1);
    const double a_rate = lambda / std::pow(k, d);
    const double denominator = b1_rate - excess * (m_min + 1.0) * a_rate;
    r.e_tau2_upper = r.e_jumps_upper / denominator;
    r.e_upward_jumps = r.e_tau2_upper * a_rate;
    r.sync_fraction_lower = r.e_tau1 / (r.e_tau1 + r.e_tau2_upper);
    return r;
}

struct KEpsilonResult {
    double scale = 1.0;
    double sync_fraction_lower = 1.0;
    bool monotone_verified = true;
    std::size_t evaluations = 0;
};

// Smallest K for which the bound's assumption holds and the synchronized
// fraction is at least 1 - epsilon, with lambda = lambda_rule(K). The result
// is exact on a grid of 3 significant digits (never coarser than integers).
inline KEpsilonResult find_k_epsilon(const ScenarioConfig& base, double epsilon,
                                     const std::function<double(double)>& lambda_rule,
                                     double k_max = 1e9) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    KEpsilonResult out;
    if (base.servers == base.replicas) return out;

    auto fraction_at = [&](double k) -> std::optional<double> {
        ++out.evaluations;
        ScenarioConfig c = base;
        c.scale = k;
        c.arrival_rate = lambda_rule(k);
        c.arrival_rate_over_scale.reset();
        const BoundReport r = sync_fraction_bound(c);
        if (!r.assumption_ok) return std::nullopt;
        return r.sync_fraction_lower;
    };
    auto good = [&](double k) {
        const auto f = fraction_at(k);
        return f && *f >= 1.0 - epsilon;
    };

    // Integer bracket by doubling, then integer bisection.
    double hi = 1.0;
    while (!good(hi)) {
        hi *= 2.0;
        if (hi > k_max) {
            throw SearchFailure("no K <= " + std::to_string(k_max) + " reaches sync fraction " +
                                std::to_string(1.0 - epsilon));
        }
    }
    double lo = hi / 2.0;  // not good (or hi == 1)
    if (hi > 1.0) {
        while (hi - lo > 1.0) {
            const double mid = std::floor((lo + hi) / 2.0);
            (good(mid) ? hi : lo) = mid;
        }
    }

    // Refine below the integer on a 3-significant-digit grid.
    const double step = std::min(1.0, std::pow(10.0, std::floor(std::log10(hi)) - 2.0));
    double k = hi;
    if (step < 1.0) {
        const double origin = std::max(1.0, hi - 1.0);
        long lo_steps = 0;
        long hi_steps = std::lround((hi - origin) / step);
        while (hi_steps - lo_steps > 1) {
            const long mid = (lo_steps + hi_steps) / 2;
            (good(origin + static_cast<double>(mid) * step) ? hi_steps : lo_steps) = mid;
        }
        k = origin + static_cast<double>(hi_steps) * step;
    }
    out.scale = k;
    out.sync_fraction_lower = fraction_at(k).value_or(0.0);

    // Verify monotonicity on a log-spaced sample of the searched range:
    // the predicate must switch exactly once and the fraction must not
    // decrease where defined.
    const int samples = 200;
    const double top = std::max(2.0 * k, k + 2.0);
    double prev_fraction = -1.0;
    bool seen_good = false;
    for (int i = 0; i <= samples; ++i) {
        const double kk = std::exp(std::log(top) * i / samples);
        const auto f = fraction_at(kk);
        const bool g = f && *f >= 1.0 - epsilon;
        if (seen_good && !g) out.monotone_verified = false;
        if (g && kk < k - step) out.monotone_verified = false;
        seen_good = seen_good || g;
        if (f) {
            if (*f < prev_fraction - 1e-12) out.monotone_verified = false;
            prev_fraction = *f;
        }
    }
    return out;
}

}  // namespace redsched
