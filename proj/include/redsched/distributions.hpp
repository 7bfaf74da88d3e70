#pragma once

#include "redsched/errors.hpp"
#include "redsched/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

namespace redsched {

enum class XKind { Deterministic1, Exponential1, Uniform02, Custom };

inline std::string_view to_string(XKind kind) {
    switch (kind) {
        case XKind::Deterministic1: return "deterministic";
        case XKind::Exponential1: return "exponential";
        case XKind::Uniform02: return "uniform02";
        case XKind::Custom: return "custom";
    }
    return "unknown";
}

inline XKind parse_x_kind(std::string_view name) {
    if (name == "deterministic" || name == "det" || name == "one") return XKind::Deterministic1;
    if (name == "exponential" || name == "exp") return XKind::Exponential1;
    if (name == "uniform02" || name == "uniform" || name == "unif") return XKind::Uniform02;
    throw ConfigError("unknown X distribution '" + std::string(name) +
                      "' (expected deterministic, exponential or uniform02)");
}

// Point estimate with its Monte-Carlo standard error (zero for closed forms).
struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

// The unit-mean, strictly positive component X of a scaled Bernoulli service
// requirement. Custom distributions supply their own sampler and must declare
// mean one; see validate_custom().
struct XSpec {
    XKind kind = XKind::Deterministic1;
    std::function<double(Rng&)> sampler;
    double declared_mean = 1.0;

    static XSpec deterministic() { return {XKind::Deterministic1, {}, 1.0}; }
    static XSpec exponential() { return {XKind::Exponential1, {}, 1.0}; }
    static XSpec uniform02() { return {XKind::Uniform02, {}, 1.0}; }
    static XSpec of(XKind kind) {
        if (kind == XKind::Custom) throw ConfigError("custom X needs a sampler");
        return {kind, {}, 1.0};
    }
    static XSpec custom(std::function<double(Rng&)> sampler, double declared_mean = 1.0) {
        if (!sampler) throw ConfigError("custom X needs a sampler");
        if (declared_mean != 1.0) {
            throw DistributionError("X must have mean 1, declared " + std::to_string(declared_mean));
        }
        return {XKind::Custom, std::move(sampler), declared_mean};
    }
};

inline double sample_x(const XSpec& x, Rng& rng) {
    switch (x.kind) {
        case XKind::Deterministic1: return 1.0;
        case XKind::Exponential1: return rng.exponential(1.0);
        case XKind::Uniform02: return 2.0 * rng.uniform_open();
        case XKind::Custom: {
            const double v = x.sampler(rng);
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DistributionError("custom X sampler returned non-positive value " +
                                        std::to_string(v));
            }
            return v;
        }
    }
    return 1.0;
}

// Statistical check of the unit-mean contract for a Custom X: the sample mean
// of n draws must lie within 3 standard errors of 1.
inline Estimate validate_custom(const XSpec& x, Rng& rng, std::size_t n = 100000) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_x(x, rng);
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    if (std::abs(mean - 1.0) > 3.0 * se) {
        throw DistributionError("custom X sample mean " + std::to_string(mean) +
                                " is not within 3 SE of 1 (SE " + std::to_string(se) + ")");
    }
    return {mean, se};
}

// Scale K >= 1 and the X component; B = X*K with probability 1/K, else 0.
class ServiceSpec {
public:
    ServiceSpec(XSpec x, double scale) : x_(std::move(x)), scale_(scale) {
        if (!(scale_ >= 1.0) || !std::isfinite(scale_)) {
            throw ConfigError("scale K must be a finite real >= 1, got " + std::to_string(scale_));
        }
    }

    const XSpec& x() const noexcept { return x_; }
    double scale() const noexcept { return scale_; }
    // Probability of a zero requirement; always derived from K.
    double zero_probability() const noexcept { return 1.0 - 1.0 / scale_; }

private:
    XSpec x_;
    double scale_;
};

inline double sample_service(const ServiceSpec& spec, Rng& rng) {
    if (rng.uniform() < 1.0 / spec.scale()) return sample_x(spec.x(), rng) * spec.scale();
    return 0.0;
}

namespace detail {

inline Estimate mc_min_moment(const XSpec& x, int d, int power, std::size_t n, Rng& rng) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        for (int j = 0; j < d; ++j) lo = std::min(lo, sample_x(x, rng));
        const double v = power == 1 ? lo : lo * lo;
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    return {mean, n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0};
}

}  // namespace detail

inline void require_replicas(int d) {
    if (d < 1) throw ConfigError("number of replicas d must be >= 1, got " + std::to_string(d));
}

// E[min{X_1..X_d}]. Closed form for the named kinds; Monte Carlo for Custom,
// which then needs a generator.
inline Estimate expected_min_x(const XSpec& x, int d, Rng* rng = nullptr,
                               std::size_t mc_samples = 1000000) {
    require_replicas(d);
    switch (x.kind) {
        case XKind::Deterministic1: return {1.0, 0.0};
        case XKind::Exponential1: return {1.0 / d, 0.0};
        case XKind::Uniform02: return {2.0 / (d + 1), 0.0};
        case XKind::Custom:
            if (rng == nullptr) throw UnsupportedClosedForm("E[min X] for custom X needs a generator");
            return detail::mc_min_moment(x, d, 1, mc_samples, *rng);
    }
    return {1.0, 0.0};
}

// E[min{X_1..X_d}^2].
inline Estimate expected_min_x_squared(const XSpec& x, int d, Rng* rng = nullptr,
                                       std::size_t mc_samples = 1000000) {
    require_replicas(d);
    switch (x.kind) {
        case XKind::Deterministic1: return {1.0, 0.0};
        case XKind::Exponential1: return {2.0 / (static_cast<double>(d) * d), 0.0};
        case XKind::Uniform02: return {8.0 / ((d + 1.0) * (d + 2.0)), 0.0};
        case XKind::Custom:
            if (rng == nullptr) throw UnsupportedClosedForm("E[min X^2] for custom X needs a generator");
            return detail::mc_min_moment(x, d, 2, mc_samples, *rng);
    }
    return {1.0, 0.0};
}

}  // namespace redsched
