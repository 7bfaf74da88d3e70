#include "redsched/redsched.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <limits>
#include <map>

using namespace redsched;

namespace {

// Explicit FCFS queues of replicas with cancel-on-completion. Each server
// holds its replicas in arrival order; the head is in service. When any
// replica of a job finishes, the job's other replicas are removed wherever
// they are.
class QueueOracle {
public:
    explicit QueueOracle(int servers) : queues_(static_cast<std::size_t>(servers)) {}

    // Advances to absolute time t, recording completion times.
    void advance_to(double t) {
        for (;;) {
            flush_zero_heads();
            double step = std::numeric_limits<double>::infinity();
            for (const auto& q : queues_) {
                if (!q.empty()) step = std::min(step, q.front().remaining);
            }
            if (now_ + step > t) break;
            now_ += step;
            for (auto& q : queues_) {
                if (!q.empty()) q.front().remaining -= step;
            }
        }
        const double dt = t - now_;
        for (auto& q : queues_) {
            if (!q.empty()) q.front().remaining -= dt;
        }
        now_ = t;
        flush_zero_heads();
    }

    void arrive(int job, std::span<const int> servers, std::span<const double> reqs) {
        arrival_[job] = now_;
        for (std::size_t j = 0; j < servers.size(); ++j) {
            queues_[static_cast<std::size_t>(servers[j])].push_back({job, reqs[j]});
        }
        flush_zero_heads();
    }

    double latency(int job) const { return completion_.at(job) - arrival_.at(job); }

    // Time until each server idles with no further arrivals.
    std::vector<double> workloads() const {
        QueueOracle copy = *this;
        std::vector<double> idle(queues_.size(), 0.0);
        std::vector<bool> done(queues_.size());
        for (std::size_t i = 0; i < queues_.size(); ++i) done[i] = queues_[i].empty();
        for (;;) {
            copy.flush_zero_heads();
            double step = std::numeric_limits<double>::infinity();
            for (const auto& q : copy.queues_) {
                if (!q.empty()) step = std::min(step, q.front().remaining);
            }
            if (!std::isfinite(step)) break;
            copy.advance_to(copy.now_ + step);
            for (std::size_t i = 0; i < copy.queues_.size(); ++i) {
                if (!done[i] && copy.queues_[i].empty()) {
                    idle[i] = copy.now_ - now_;
                    done[i] = true;
                }
            }
        }
        return idle;
    }

private:
    struct Replica {
        int job;
        double remaining;
    };

    void flush_zero_heads() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto& q : queues_) {
                if (!q.empty() && q.front().remaining <= 1e-12) {
                    complete(q.front().job);
                    changed = true;
                    break;
                }
            }
        }
    }

    void complete(int job) {
        completion_.emplace(job, now_);
        for (auto& q : queues_) {
            std::erase_if(q, [&](const Replica& r) { return r.job == job; });
        }
    }

    std::vector<std::deque<Replica>> queues_;
    std::map<int, double> arrival_;
    std::map<int, double> completion_;
    double now_ = 0.0;
};

ScenarioConfig make_config(int n, int d, double k, double lambda) {
    ScenarioConfig c;
    c.servers = n;
    c.replicas = d;
    c.scale = k;
    c.arrival_rate = lambda;
    return c;
}

}  // namespace

TEST(Drain, Examples) {
    WorkloadState a{{3.0, 1.0}, 0.0};
    drain(a, 2.0);
    EXPECT_EQ(a.omega, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(a.clock, 2.0);
    WorkloadState b{{4.0, 4.0}, 0.0};
    drain(b, 1.0);
    EXPECT_EQ(b.omega, (std::vector<double>{3.0, 3.0}));
    WorkloadState c{{2.0, 1.0, 1.0}, 0.0};
    drain(c, 5.0);
    EXPECT_EQ(c.omega, (std::vector<double>{0.0, 0.0, 0.0}));
    EXPECT_THROW(drain(c, -1.0), ConfigError);
}

TEST(ApplyArrival, MixedWorkedExample) {
    WorkloadState s{{4.1, 4.1, 3.5, 2.3}, 0.0};
    const std::vector<int> servers{1, 3};
    const std::vector<double> reqs{2.2, 1.5};
    const JobOutcome out = apply_arrival(s, servers, reqs);
    EXPECT_EQ(s.omega[0], 4.1);
    EXPECT_EQ(s.omega[1], 4.1);
    EXPECT_EQ(s.omega[2], 3.5);
    EXPECT_DOUBLE_EQ(s.omega[3], 3.8);
    EXPECT_DOUBLE_EQ(out.latency, 3.8);
    EXPECT_DOUBLE_EQ(out.waiting, 2.3);
    EXPECT_EQ(out.completing_server, 3);
    EXPECT_EQ(out.tag, JobTag::A);
}

TEST(ApplyArrival, TypeCLeavesStateUnchanged) {
    WorkloadState s{{5.0, 2.0, 7.0}, 0.0};
    const std::vector<int> servers{0, 2};
    const std::vector<double> reqs{0.0, 0.0};
    const JobOutcome out = apply_arrival(s, servers, reqs);
    EXPECT_EQ(s.omega, (std::vector<double>{5.0, 2.0, 7.0}));
    EXPECT_EQ(out.latency, 5.0);
    EXPECT_EQ(out.waiting, 5.0);
    EXPECT_EQ(out.tag, JobTag::C);
}

TEST(ApplyArrival, SynchronizedMaxGrowsByMin) {
    WorkloadState s{{2.5, 2.5, 2.5, 2.5}, 0.0};
    const std::vector<int> servers{0, 2};
    const std::vector<double> reqs{3.0, 1.25};
    apply_arrival(s, servers, reqs);
    EXPECT_EQ(s.omega, (std::vector<double>{3.75, 2.5, 3.75, 2.5}));
    EXPECT_EQ(max_workload(s.omega), 2.5 + 1.25);
}

TEST(ApplyArrival, RejectsBadServers) {
    WorkloadState s = WorkloadState::empty(3);
    const std::vector<double> reqs{1.0, 1.0};
    EXPECT_THROW(apply_arrival(s, std::vector<int>{0, 0}, reqs), ConfigError);
    EXPECT_THROW(apply_arrival(s, std::vector<int>{0, 3}, reqs), ConfigError);
    EXPECT_THROW(apply_arrival(s, std::vector<int>{0}, reqs), ConfigError);
}

TEST(ApplyArrival, MatchesQueueOracle) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ScenarioConfig c = make_config(4, 2, 3.0, 0.8);
        EventStream stream = generate_stream(c, seed, 400.0);
        WorkloadState s = WorkloadState::empty(4);
        QueueOracle oracle(4);
        ArrivalEvent ev;
        int job = 0;
        std::vector<double> latencies;
        while (stream.next(ev)) {
            drain(s, ev.time - s.clock);
            oracle.advance_to(ev.time);
            const std::vector<double> expected_omega = oracle.workloads();
            for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(s.omega[i], expected_omega[i], 1e-9) << "job " << job;
            latencies.push_back(apply_arrival(s, ev.slots, ev.requirements).latency);
            oracle.arrive(job++, ev.slots, ev.requirements);
        }
        oracle.advance_to(1e9);
        for (int j = 0; j < job; ++j) ASSERT_NEAR(latencies[static_cast<std::size_t>(j)], oracle.latency(j), 1e-9);
        EXPECT_GT(job, 200);
    }
}

TEST(Surplus, Examples) {
    EXPECT_NEAR(surplus(std::vector<double>{4.1, 4.1, 3.5, 3.8}), 0.9, 1e-12);
    EXPECT_EQ(surplus(std::vector<double>{3.0, 3.0, 3.0}), 0.0);
    EXPECT_EQ(surplus(std::vector<double>{0.0, 0.0, 0.0}), 0.0);
}

TEST(Synchronized, ExactSemantics) {
    EXPECT_FALSE(is_synchronized(std::vector<double>{1.0, 1.0 + 1e-12}));
    EXPECT_TRUE(is_synchronized(std::vector<double>{5.0, 5.0}));
    EXPECT_TRUE(is_synchronized(std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(SyncTime, Examples) {
    EXPECT_EQ(sync_time_in_interval(std::vector<double>{2.0, 1.0, 1.0}, 5.0), 3.0);
    EXPECT_EQ(sync_time_in_interval(std::vector<double>{4.0, 4.0}, 1.5), 1.5);
    EXPECT_EQ(sync_time_in_interval(std::vector<double>{3.0, 1.0}, 2.0), 0.0);
}

TEST(TruncatedSpace, Examples) {
    EXPECT_TRUE(in_truncated_space(std::vector<double>{4, 4, 3, 2}, 2));
    EXPECT_FALSE(in_truncated_space(std::vector<double>{4, 3, 3, 2}, 2));
    EXPECT_TRUE(in_truncated_space(std::vector<double>{4, 3, 3, 2}, 1));
    EXPECT_TRUE(in_truncated_space(std::vector<double>{1, 7, 2}, 1));
}

TEST(DescendingOrder, TiesByIndex) {
    EXPECT_EQ(descending_order(std::vector<double>{1, 3, 3, 0, 1}), (std::vector<int>{1, 2, 0, 4, 3}));
}

TEST(RunSimulation, FullReplicationAlwaysSynchronized) {
    const ScenarioConfig c = make_config(2, 2, 10.0, 5.0);
    const SimMetrics m = run_simulation(c, 3, 5000.0);
    EXPECT_EQ(m.time_in_sync, m.total_time);
    EXPECT_EQ(m.sync_fraction(), 1.0);
    EXPECT_DOUBLE_EQ(m.total_time, 4500.0);
}

TEST(RunSimulation, OverloadDrifts) {
    const ScenarioConfig c = make_config(2, 2, 10.0, 15.0);
    SimulationOptions opt;
    opt.max_sample_stride = 10;
    const SimMetrics m = run_simulation(c, 4, 10000.0, opt);
    EXPECT_GT(m.final_max, 100.0);
    ASSERT_GE(m.max_samples.size(), 1000u);
    EXPECT_GT(m.max_samples.back(), m.max_samples[m.max_samples.size() / 4]);
}

TEST(RunSimulation, WaitingIdentity) {
    const ScenarioConfig c = make_config(4, 2, 5.0, 2.0);
    const SimMetrics m = run_simulation(c, 5, 5000.0);
    EXPECT_NEAR(m.mean_latency() - m.mean_waiting(), m.mean_latency_minus_waiting(), 1e-9);
    EXPECT_GE(m.mean_waiting(), 0.0);
}

// Event-wise time accounting against a midpoint-rule integral of the
// synchronicity indicator; arrival instants are grid breakpoints, so only the
// drain-to-zero crossings contribute quadrature error (at most h per crossing).
TEST(RunSimulation, SyncTimeMatchesIntegration) {
    ScenarioConfig c = make_config(3, 2, 2.0, 1.0);
    c.horizon = 20.0;
    c.warmup_time = 0.0;
    const SimMetrics m = run_simulation(c, 6);

    const double h = 2e-7;
    EventStream stream = generate_stream(c, 6, c.horizon);
    WorkloadState s = WorkloadState::empty(3);
    double integral = 0.0;
    std::size_t crossings = 0;
    auto integrate = [&](double t0, double t1) {
        const std::vector<double> base = s.omega;
        std::vector<double> w(base.size());
        bool prev = is_synchronized(base);
        for (double a = t0; a < t1; a += h) {
            const double b = std::min(a + h, t1);
            const double mid = 0.5 * (a + b) - t0;
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(base[i] - mid, 0.0);
            const bool sync = is_synchronized(w);
            if (sync != prev) ++crossings;
            prev = sync;
            if (sync) integral += b - a;
        }
    };
    ArrivalEvent ev;
    while (stream.next(ev)) {
        integrate(s.clock, ev.time);
        drain(s, ev.time - s.clock);
        apply_arrival(s, ev.slots, ev.requirements);
    }
    integrate(s.clock, c.horizon);

    EXPECT_DOUBLE_EQ(m.total_time, 20.0);
    EXPECT_LE(std::abs(integral - m.time_in_sync), h * static_cast<double>(crossings + 1));
    EXPECT_LE(std::abs(integral - m.time_in_sync) / m.time_in_sync, 1e-6);
    EXPECT_GT(crossings, 0u);
}

TEST(SimMetrics, MergeAddsCounts) {
    const ScenarioConfig c = make_config(3, 2, 4.0, 1.0);
    SimMetrics a = run_simulation(c, 7, 1000.0);
    const SimMetrics b = run_simulation(c, 8, 1000.0);
    const auto jobs = a.job_count() + b.job_count();
    const double sync = a.time_in_sync + b.time_in_sync;
    a.merge(b);
    EXPECT_EQ(a.job_count(), jobs);
    EXPECT_DOUBLE_EQ(a.time_in_sync, sync);
}
