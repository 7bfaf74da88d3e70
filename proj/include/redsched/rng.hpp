#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace redsched {

// SplitMix64 finalizer. Used both as a seed sequence for the engine and to
// derive independent sub-seeds for grid cells and replications.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Seeded generator with platform-independent variates. std::mt19937_64 output
// is fixed by the standard; the distribution helpers below avoid the
// implementation-defined std:: distributions so streams are bit-identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Exponential with the given rate; strictly positive.
    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    bool bernoulli(double prob) { return uniform() < prob; }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t r = next();
        while (r >= limit) r = next();
        return r % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace redsched
