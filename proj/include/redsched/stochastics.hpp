#pragma once

#include "redsched/config.hpp"
#include "redsched/distributions.hpp"
#include "redsched/errors.hpp"
#include "redsched/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace redsched {

// A: no zero requirement. B: some but not all zero. C: all zero.
// B1 is the B sub-class placed with zero replicas on the top d-1 ordered
// servers and one nonzero replica on the least loaded server; it is a
// placement mark and never results from classify_job().
enum class JobTag : std::uint8_t { A = 0, B = 1, B1 = 2, C = 3 };

inline std::string_view to_string(JobTag tag) {
    switch (tag) {
        case JobTag::A: return "A";
        case JobTag::B: return "B";
        case JobTag::B1: return "B1";
        case JobTag::C: return "C";
    }
    return "?";
}

inline JobTag classify_job(std::span<const double> requirements) {
    if (requirements.empty()) throw ConfigError("a job needs at least one replica");
    std::size_t zeros = 0;
    for (double b : requirements) zeros += (b == 0.0);
    if (zeros == 0) return JobTag::A;
    if (zeros == requirements.size()) return JobTag::C;
    return JobTag::B;
}

struct JobTypeProbabilities {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    // Probability that an arrival is a B1 job, i.e. the specific ordered
    // placement (N-d)!/N! times (1-p) p^(d-1). Zero when d == 1 (no B jobs)
    // or when N was not supplied.
    double b1 = 0.0;
};

// (N-d)!/N! as a product, which stays finite for any N.
inline double falling_factorial_inverse(int n, int d) {
    double v = 1.0;
    for (int i = 0; i < d; ++i) v /= static_cast<double>(n - i);
    return v;
}

inline JobTypeProbabilities job_type_probabilities(const ServiceSpec& spec, int d,
                                                   std::optional<int> servers = std::nullopt) {
    require_replicas(d);
    const double q = 1.0 / spec.scale();  // 1 - p
    const double p = spec.zero_probability();
    JobTypeProbabilities out;
    out.a = std::pow(q, d);
    out.c = std::pow(p, d);
    out.b = 1.0 - out.a - out.c;
    // Absorb rounding so that a + b + c is exactly 1 when summed in order.
    for (int i = 0; i < 4 && out.a + out.b + out.c != 1.0; ++i) {
        out.b = std::nextafter(out.b, out.a + out.b + out.c > 1.0 ? 0.0 : 1.0);
    }
    if (servers && d > 1) {
        if (*servers < d) throw ConfigError("N must be >= d");
        out.b1 = falling_factorial_inverse(*servers, d) * q * std::pow(p, d - 1);
    }
    return out;
}

// How an event's slots are to be read by the consuming system.
enum class Placement : std::uint8_t {
    Servers,           // slots are server indices (0-based)
    OrderedPositions,  // slots are positions in the consumer's own descending order (0-based)
};

struct ArrivalEvent {
    double time = 0.0;
    JobTag tag = JobTag::C;
    Placement placement = Placement::Servers;
    std::vector<int> slots;           // d distinct entries in [0, N)
    std::vector<double> requirements;  // d entries, each X*K or 0

    bool operator==(const ArrivalEvent&) const = default;
};

enum class StreamKind {
    Uniform,  // d uniformly sampled servers, i.i.d. scaled Bernoulli requirements
    Coupled,  // thinning by job type with ordered-position marks
};

// Lazily generated Poisson arrival stream, deterministic in (config, seed,
// horizon, kind).
class EventStream {
public:
    EventStream(const ScenarioConfig& config, std::uint64_t seed, double horizon, StreamKind kind,
                std::size_t max_events = std::numeric_limits<std::size_t>::max())
        : servers_(config.servers),
          replicas_(config.replicas),
          rate_(config.lambda()),
          service_(config.service()),
          seed_(seed),
          horizon_(horizon),
          kind_(kind),
          max_events_(max_events),
          rng_(seed),
          perm_(static_cast<std::size_t>(config.servers)) {
        if (servers_ < replicas_) throw ConfigError("N must be >= d");
        require_replicas(replicas_);
        if (!(rate_ > 0.0)) throw ConfigError("lambda must be positive");
        if (!(horizon_ >= 0.0)) throw ConfigError("horizon must be >= 0");
        std::iota(perm_.begin(), perm_.end(), 0);
        probs_ = job_type_probabilities(service_, replicas_, servers_);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    double horizon() const noexcept { return horizon_; }
    StreamKind kind() const noexcept { return kind_; }
    const JobTypeProbabilities& probabilities() const noexcept { return probs_; }
    std::size_t emitted() const noexcept { return emitted_; }

    // Writes the next event into `out` (reusing its storage). Returns false
    // once the horizon or the event limit is reached.
    bool next(ArrivalEvent& out) {
        if (done_ || emitted_ >= max_events_) return false;
        clock_ += rng_.exponential(rate_);
        if (clock_ > horizon_) {
            done_ = true;
            return false;
        }
        out.time = clock_;
        out.slots.resize(static_cast<std::size_t>(replicas_));
        out.requirements.resize(static_cast<std::size_t>(replicas_));
        if (kind_ == StreamKind::Uniform) {
            fill_uniform(out);
        } else {
            fill_coupled(out);
        }
        ++emitted_;
        return true;
    }

    std::vector<ArrivalEvent> collect() {
        std::vector<ArrivalEvent> events;
        ArrivalEvent ev;
        while (next(ev)) events.push_back(ev);
        return events;
    }

private:
    // Partial Fisher-Yates over a persistent permutation: the first d entries
    // are a uniform ordered sample without replacement whatever the prior
    // arrangement.
    void sample_slots(std::vector<int>& slots) {
        const auto n = perm_.size();
        for (std::size_t j = 0; j < slots.size(); ++j) {
            const auto k = j + static_cast<std::size_t>(rng_.below(n - j));
            std::swap(perm_[j], perm_[k]);
            slots[j] = perm_[j];
        }
    }

    double nonzero_requirement() { return sample_x(service_.x(), rng_) * service_.scale(); }

    void fill_uniform(ArrivalEvent& out) {
        out.placement = Placement::Servers;
        sample_slots(out.slots);
        for (auto& b : out.requirements) b = sample_service(service_, rng_);
        out.tag = classify_job(out.requirements);
    }

    bool is_b1_pattern(const ArrivalEvent& ev) const {
        const int d = replicas_;
        if (d < 2) return false;
        for (int j = 0; j + 1 < d; ++j) {
            if (ev.slots[static_cast<std::size_t>(j)] != j || ev.requirements[static_cast<std::size_t>(j)] != 0.0) {
                return false;
            }
        }
        return ev.slots.back() == servers_ - 1 && ev.requirements.back() > 0.0;
    }

    void fill_coupled(ArrivalEvent& out) {
        const double u = rng_.uniform();
        const int d = replicas_;
        if (u < probs_.a) {
            out.tag = JobTag::A;
            out.placement = Placement::Servers;
            sample_slots(out.slots);
            for (auto& b : out.requirements) b = nonzero_requirement();
            return;
        }
        if (u < probs_.a + probs_.b1) {
            out.tag = JobTag::B1;
            out.placement = Placement::OrderedPositions;
            for (int j = 0; j + 1 < d; ++j) {
                out.slots[static_cast<std::size_t>(j)] = j;
                out.requirements[static_cast<std::size_t>(j)] = 0.0;
            }
            out.slots.back() = servers_ - 1;
            out.requirements.back() = nonzero_requirement();
            return;
        }
        // Remaining B and C jobs: uniform ordered positions and i.i.d.
        // requirements conditioned on being neither type A nor the B1 pattern.
        out.placement = Placement::OrderedPositions;
        for (;;) {
            sample_slots(out.slots);
            for (auto& b : out.requirements) b = sample_service(service_, rng_);
            const JobTag tag = classify_job(out.requirements);
            if (tag == JobTag::A || is_b1_pattern(out)) continue;
            out.tag = tag;
            return;
        }
    }

    int servers_;
    int replicas_;
    double rate_;
    ServiceSpec service_;
    std::uint64_t seed_;
    double horizon_;
    StreamKind kind_;
    std::size_t max_events_;
    Rng rng_;
    std::vector<int> perm_;
    JobTypeProbabilities probs_;
    double clock_ = 0.0;
    std::size_t emitted_ = 0;
    bool done_ = false;
};

inline EventStream generate_stream(const ScenarioConfig& config, std::uint64_t seed, double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    return EventStream(config, seed, horizon, StreamKind::Uniform);
}

inline EventStream generate_coupled_stream(const ScenarioConfig& config, std::uint64_t seed,
                                           double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    return EventStream(config, seed, horizon, StreamKind::Coupled);
}

}  // namespace redsched
