#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstddef>
#include <span>

namespace redsched {

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;  // 95% two-sided Student-t
    std::size_t n = 0;
};

inline MeanCi mean_ci95(std::span<const double> values) {
    MeanCi out;
    out.n = values.size();
    if (values.empty()) return out;
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double v : values) {
        ++k;
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
    }
    out.mean = mean;
    if (out.n < 2) return out;
    const double sd = std::sqrt(m2 / static_cast<double>(out.n - 1));
    const boost::math::students_t dist(static_cast<double>(out.n - 1));
    out.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(out.n));
    return out;
}

}  // namespace redsched
