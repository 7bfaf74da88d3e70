#include "redsched/redsched.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

using namespace redsched;

namespace {

ScenarioConfig make_config(int n, int d, double k, double lambda) {
    ScenarioConfig c;
    c.servers = n;
    c.replicas = d;
    c.scale = k;
    c.arrival_rate = lambda;
    return c;
}

// Binomial frequency check: |hits/n - p| <= z * sqrt(p(1-p)/n).
void expect_frequency(std::size_t hits, std::size_t n, double p, double z = 3.0) {
    const double freq = static_cast<double>(hits) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    EXPECT_LE(std::abs(freq - p), z * se) << "freq " << freq << " vs " << p;
}

}  // namespace

TEST(SampleX, DeterministicIsExactlyOne) {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_x(XSpec::deterministic(), rng), 1.0);
}

TEST(SampleX, ExponentialMeanWithinThreeSe) {
    Rng rng(11);
    const std::size_t n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_x(XSpec::exponential(), rng);
        ASSERT_GT(v, 0.0);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - 1.0), 3.0 * se);
}

TEST(SampleX, UniformRangeAndMean) {
    Rng rng(13);
    const std::size_t n = 100000;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_x(XSpec::uniform02(), rng);
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 2.0);
        sum += v;
    }
    // Var U[0,2] = 1/3
    EXPECT_LE(std::abs(sum / n - 1.0), 3.0 * std::sqrt(1.0 / 3.0 / n));
}

TEST(SampleX, CustomNonPositiveRejected) {
    Rng rng(1);
    const XSpec bad = XSpec::custom([](Rng&) { return 0.0; });
    EXPECT_THROW(sample_x(bad, rng), DistributionError);
    const XSpec negative = XSpec::custom([](Rng&) { return -1.0; });
    EXPECT_THROW(sample_x(negative, rng), DistributionError);
}

TEST(SampleX, CustomWrongMeanRejected) {
    EXPECT_THROW(XSpec::custom([](Rng&) { return 2.0; }, 2.0), DistributionError);
    Rng rng(3);
    const XSpec liar = XSpec::custom([](Rng&) { return 2.0; });
    EXPECT_THROW(validate_custom(liar, rng, 1000), DistributionError);
}

TEST(SampleService, ScaleOneIsAlwaysX) {
    Rng rng(5);
    const ServiceSpec spec(XSpec::exponential(), 1.0);
    EXPECT_EQ(spec.zero_probability(), 0.0);
    for (int i = 0; i < 1000; ++i) EXPECT_GT(sample_service(spec, rng), 0.0);
}

TEST(SampleService, ScaleTwoFrequencies) {
    Rng rng(17);
    const ServiceSpec spec(XSpec::deterministic(), 2.0);
    const std::size_t n = 100000;
    std::size_t zeros = 0, twos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = sample_service(spec, rng);
        if (b == 0.0) {
            ++zeros;
        } else {
            ASSERT_EQ(b, 2.0);
            ++twos;
        }
    }
    expect_frequency(zeros, n, 0.5);
    expect_frequency(twos, n, 0.5);
}

TEST(SampleService, UnitMeanForEveryKind) {
    for (XKind kind : {XKind::Deterministic1, XKind::Exponential1, XKind::Uniform02}) {
        for (double k : {1.0, 4.0, 25.0}) {
            Rng rng(derive_seed(99, static_cast<std::uint64_t>(kind) * 100 + static_cast<std::uint64_t>(k)));
            const ServiceSpec spec(XSpec::of(kind), k);
            const std::size_t n = 1000000;
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double b = sample_service(spec, rng);
                sum += b;
                sum2 += b * b;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sum2 / n - mean * mean) / n);
            EXPECT_LE(std::abs(mean - 1.0), 3.0 * se) << to_string(kind) << " K=" << k;
        }
    }
}

TEST(SampleService, RejectsScaleBelowOne) {
    EXPECT_THROW(ServiceSpec(XSpec::deterministic(), 0.5), ConfigError);
}

TEST(ClassifyJob, Examples) {
    EXPECT_EQ(classify_job(std::vector<double>{2.2, 1.5}), JobTag::A);
    EXPECT_EQ(classify_job(std::vector<double>{0.0, 0.0}), JobTag::C);
    EXPECT_EQ(classify_job(std::vector<double>{0.0, 3.0}), JobTag::B);
}

// Oracle: enumerate all 2^d zero/nonzero patterns.
TEST(JobTypes, MatchEnumeration) {
    for (double k : {1.0, 2.0, 3.0, 10.0}) {
        for (int d = 1; d <= 5; ++d) {
            const double q = 1.0 / k;
            double pa = 0.0, pb = 0.0, pc = 0.0;
            for (unsigned mask = 0; mask < (1u << d); ++mask) {
                double prob = 1.0;
                int nonzero = 0;
                for (int j = 0; j < d; ++j) {
                    const bool nz = (mask >> j) & 1u;
                    prob *= nz ? q : 1.0 - q;
                    nonzero += nz;
                }
                if (nonzero == d) {
                    pa += prob;
                } else if (nonzero == 0) {
                    pc += prob;
                } else {
                    pb += prob;
                }
            }
            const auto p = job_type_probabilities(ServiceSpec(XSpec::deterministic(), k), d);
            EXPECT_NEAR(p.a, pa, 1e-15);
            EXPECT_NEAR(p.b, pb, 1e-14);
            EXPECT_NEAR(p.c, pc, 1e-15);
            EXPECT_EQ(p.a + p.b + p.c, 1.0);
        }
    }
}

TEST(JobTypes, Examples) {
    const auto p = job_type_probabilities(ServiceSpec(XSpec::deterministic(), 2.0), 2);
    EXPECT_DOUBLE_EQ(p.a, 0.25);
    EXPECT_DOUBLE_EQ(p.b, 0.50);
    EXPECT_DOUBLE_EQ(p.c, 0.25);
    const auto one = job_type_probabilities(ServiceSpec(XSpec::deterministic(), 1.0), 3);
    EXPECT_EQ(one.a, 1.0);
    EXPECT_EQ(one.b, 0.0);
    EXPECT_EQ(one.c, 0.0);
}

TEST(JobTypes, B1RateExample) {
    const auto p = job_type_probabilities(ServiceSpec(XSpec::deterministic(), 2.0), 2, 3);
    // (1/6)(1/2)(1/2) per arrival, times lambda = 6
    EXPECT_DOUBLE_EQ(p.b1 * 6.0, 0.25);
    EXPECT_EQ(job_type_probabilities(ServiceSpec(XSpec::deterministic(), 2.0), 1, 3).b1, 0.0);
}

TEST(ExpectedMinX, ClosedForms) {
    EXPECT_EQ(expected_min_x(XSpec::deterministic(), 5).value, 1.0);
    EXPECT_EQ(expected_min_x(XSpec::exponential(), 2).value, 0.5);
    EXPECT_DOUBLE_EQ(expected_min_x(XSpec::uniform02(), 2).value, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(expected_min_x_squared(XSpec::exponential(), 2).value, 0.5);
    EXPECT_DOUBLE_EQ(expected_min_x_squared(XSpec::uniform02(), 2).value, 8.0 / 12.0);
    EXPECT_THROW(expected_min_x(XSpec::deterministic(), 0), ConfigError);
}

TEST(ExpectedMinX, UniformPairedMonteCarlo) {
    Rng rng(23);
    const std::size_t n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::min(sample_x(XSpec::uniform02(), rng), sample_x(XSpec::uniform02(), rng));
        sum += m;
        sum2 += m * m;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - 2.0 / 3.0), 3.0 * se);
}

TEST(ExpectedMinX, CustomUsesMonteCarlo) {
    const XSpec two_point = XSpec::custom([](Rng& r) { return r.uniform() < 0.5 ? 0.5 : 1.5; });
    EXPECT_THROW(expected_min_x(two_point, 2), UnsupportedClosedForm);
    Rng rng(29);
    const Estimate e = expected_min_x(two_point, 2, &rng, 200000);
    // min is 1.5 only if both draws are 1.5: 0.25*1.5 + 0.75*0.5 = 0.75
    EXPECT_GT(e.standard_error, 0.0);
    EXPECT_LE(std::abs(e.value - 0.75), 4.0 * e.standard_error);
}

TEST(Stream, PoissonCount) {
    const ScenarioConfig c = make_config(4, 2, 10.0, 50.0);
    EventStream s = generate_stream(c, 31, 100.0);
    const auto events = s.collect();
    EXPECT_LE(std::abs(static_cast<double>(events.size()) - 5000.0), 3.0 * std::sqrt(5000.0));
    for (std::size_t i = 1; i < events.size(); ++i) EXPECT_GT(events[i].time, events[i - 1].time);
}

TEST(Stream, Deterministic) {
    const ScenarioConfig c = make_config(5, 3, 4.0, 7.0);
    EXPECT_EQ(generate_stream(c, 41, 200.0).collect(), generate_stream(c, 41, 200.0).collect());
    EXPECT_NE(generate_stream(c, 41, 200.0).collect(), generate_stream(c, 42, 200.0).collect());
    EXPECT_EQ(generate_coupled_stream(c, 41, 200.0).collect(), generate_coupled_stream(c, 41, 200.0).collect());
}

TEST(Stream, RejectsBadConfig) {
    EXPECT_THROW(generate_stream(make_config(1, 2, 2.0, 1.0), 1, 10.0), ConfigError);
    EXPECT_THROW(generate_stream(make_config(3, 2, 2.0, 1.0), 1, 0.0), ConfigError);
}

TEST(Stream, PairUniformityChiSquare) {
    const ScenarioConfig c = make_config(4, 2, 3.0, 1.0);
    EventStream s = generate_stream(c, 43, 60000.0);
    std::map<std::pair<int, int>, std::size_t> counts;
    std::size_t n = 0;
    ArrivalEvent ev;
    while (s.next(ev)) {
        ASSERT_EQ(ev.slots.size(), 2u);
        ASSERT_NE(ev.slots[0], ev.slots[1]);
        for (int v : ev.slots) {
            ASSERT_GE(v, 0);
            ASSERT_LT(v, 4);
        }
        ++counts[{std::min(ev.slots[0], ev.slots[1]), std::max(ev.slots[0], ev.slots[1])}];
        ++n;
    }
    ASSERT_EQ(counts.size(), 6u);
    const double expected = static_cast<double>(n) / 6.0;
    double chi2 = 0.0;
    for (const auto& [pair, count] : counts) chi2 += std::pow(count - expected, 2) / expected;
    EXPECT_LT(chi2, 15.086);  // chi-square(5) 99% quantile
}

TEST(CoupledStream, ThinningFrequencies) {
    const ScenarioConfig c = make_config(3, 2, 2.0, 10.0);
    EventStream s = generate_coupled_stream(c, 47, 20000.0);
    std::array<std::size_t, 4> tags{};
    std::size_t n = 0;
    ArrivalEvent ev;
    while (s.next(ev)) {
        ++tags[static_cast<std::size_t>(ev.tag)];
        ++n;
        EXPECT_EQ(classify_job(ev.requirements) == JobTag::A, ev.tag == JobTag::A);
        if (ev.tag == JobTag::B1) {
            EXPECT_EQ(ev.placement, Placement::OrderedPositions);
            EXPECT_EQ(ev.slots, (std::vector<int>{0, 2}));
            EXPECT_EQ(ev.requirements[0], 0.0);
            EXPECT_GT(ev.requirements[1], 0.0);
        }
    }
    expect_frequency(tags[static_cast<std::size_t>(JobTag::A)], n, 0.25);
    expect_frequency(tags[static_cast<std::size_t>(JobTag::B1)], n, 1.0 / 24.0);
    expect_frequency(tags[static_cast<std::size_t>(JobTag::C)], n, 0.25);
}

// Under the uniform stream a (zero, nonzero) job lands on ordered positions
// (0, N-1) in that replica order with probability (N-d)!/N! * (1-p) p; the
// coupled stream must match the total B mass including B1.
TEST(CoupledStream, BMassMatchesUniformStream) {
    const ScenarioConfig c = make_config(4, 2, 3.0, 10.0);
    EventStream s = generate_coupled_stream(c, 53, 20000.0);
    std::size_t n = 0, b_total = 0;
    ArrivalEvent ev;
    while (s.next(ev)) {
        ++n;
        if (ev.tag == JobTag::B || ev.tag == JobTag::B1) ++b_total;
    }
    expect_frequency(b_total, n, 2.0 * (1.0 / 3.0) * (2.0 / 3.0));
}
