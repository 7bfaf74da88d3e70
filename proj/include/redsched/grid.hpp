#pragma once

// Parameter-grid execution with per-seed and seed-aggregated CSV rows.

#include "redsched/bounds.hpp"
#include "redsched/config.hpp"
#include "redsched/errors.hpp"
#include "redsched/parallel.hpp"
#include "redsched/rng.hpp"
#include "redsched/scenario_io.hpp"
#include "redsched/stats.hpp"
#include "redsched/workload.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace redsched {

struct GridRow {
    std::size_t cell = 0;
    std::optional<std::uint64_t> seed;  // unset on aggregate rows
    ScenarioConfig config;
    std::string status = "ok";

    double sync_fraction = 0.0;
    double mean_waiting = 0.0;
    double mean_latency = 0.0;
    double mean_latency_minus_waiting = 0.0;
    double mean_max_workload = 0.0;
    double final_max_workload = 0.0;
    double jobs_a = 0.0, jobs_b = 0.0, jobs_c = 0.0;

    // 95% half-widths, aggregate rows only.
    std::optional<double> sync_fraction_ci, mean_waiting_ci, mean_latency_ci, mean_latency_minus_waiting_ci;

    std::optional<double> waiting_time_upper_bound;
    std::optional<double> latency_upper_bound;
    std::optional<double> sync_fraction_lower;
};

struct GridResult {
    std::vector<GridRow> rows;  // ordered by cell, seed rows then the aggregate row
    std::size_t cell_count = 0;
};

inline std::vector<ScenarioConfig> grid_cells(const GridSpec& grid) {
    std::vector<int> ns = grid.servers_values;
    std::vector<double> ks = grid.scale_values;
    if (ns.empty()) ns.push_back(grid.base.servers);
    if (ks.empty()) ks.push_back(grid.base.scale);
    std::vector<ScenarioConfig> cells;
    for (int n : ns) {
        for (double k : ks) {
            if (grid.lambda_over_scale_values.empty()) {
                ScenarioConfig c = grid.base;
                c.servers = n;
                c.scale = k;
                cells.push_back(std::move(c));
                continue;
            }
            for (double r : grid.lambda_over_scale_values) {
                ScenarioConfig c = grid.base;
                c.servers = n;
                c.scale = k;
                c.arrival_rate.reset();
                c.arrival_rate_over_scale = r;
                cells.push_back(std::move(c));
            }
        }
    }
    return cells;
}

namespace detail {

inline void fill_bounds(GridRow& row) {
    try {
        const auto lat = latency_upper_bound(row.config);
        row.waiting_time_upper_bound = lat.waiting;
        row.latency_upper_bound = lat.latency;
    } catch (const DomainError&) {
        // unstable comparison queue: no finite bound
    }
    const BoundReport b = sync_fraction_bound(row.config);
    if (b.assumption_ok) row.sync_fraction_lower = b.sync_fraction_lower;
}

inline GridRow aggregate(const std::vector<GridRow>& seeds, std::size_t cell, const ScenarioConfig& config) {
    GridRow agg;
    agg.cell = cell;
    agg.config = config;
    std::vector<double> sf, w, t, tw, mm, fm, a, b, c;
    for (const auto& r : seeds) {
        if (r.status != "ok") continue;
        sf.push_back(r.sync_fraction);
        w.push_back(r.mean_waiting);
        t.push_back(r.mean_latency);
        tw.push_back(r.mean_latency_minus_waiting);
        mm.push_back(r.mean_max_workload);
        fm.push_back(r.final_max_workload);
        a.push_back(r.jobs_a);
        b.push_back(r.jobs_b);
        c.push_back(r.jobs_c);
    }
    if (sf.empty()) {
        agg.status = seeds.empty() ? "error: no seeds" : seeds.front().status;
        return agg;
    }
    const auto s = mean_ci95(sf), ww = mean_ci95(w), tt = mean_ci95(t), dd = mean_ci95(tw);
    agg.sync_fraction = s.mean;
    agg.sync_fraction_ci = s.half_width;
    agg.mean_waiting = ww.mean;
    agg.mean_waiting_ci = ww.half_width;
    agg.mean_latency = tt.mean;
    agg.mean_latency_ci = tt.half_width;
    agg.mean_latency_minus_waiting = dd.mean;
    agg.mean_latency_minus_waiting_ci = dd.half_width;
    agg.mean_max_workload = mean_ci95(mm).mean;
    agg.final_max_workload = mean_ci95(fm).mean;
    agg.jobs_a = mean_ci95(a).mean;
    agg.jobs_b = mean_ci95(b).mean;
    agg.jobs_c = mean_ci95(c).mean;
    agg.waiting_time_upper_bound = seeds.front().waiting_time_upper_bound;
    agg.latency_upper_bound = seeds.front().latency_upper_bound;
    agg.sync_fraction_lower = seeds.front().sync_fraction_lower;
    return agg;
}

}  // namespace detail

// Runs every (cell, seed) pair. Each pair uses the sub-seed
// derive_seed(seed, cell), so results do not depend on the worker count.
// Invalid cells produce error rows instead of aborting the grid.
inline GridResult run_grid(const GridSpec& grid) {
    const std::vector<ScenarioConfig> cells = grid_cells(grid);
    const std::vector<std::uint64_t>& seeds = grid.base.seeds;
    if (seeds.empty()) throw ConfigError("grid needs at least one seed");
    const std::size_t per_cell = seeds.size();
    std::vector<GridRow> seed_rows(cells.size() * per_cell);

    parallel_for(seed_rows.size(), grid.workers, [&](std::size_t job) {
        const std::size_t cell = job / per_cell;
        const std::uint64_t seed = seeds[job % per_cell];
        GridRow& row = seed_rows[job];
        row.cell = cell;
        row.seed = seed;
        row.config = cells[cell];
        try {
            row.config.validate();
            const SimMetrics m = run_simulation(row.config, derive_seed(seed, cell));
            row.sync_fraction = m.sync_fraction();
            row.mean_waiting = m.mean_waiting();
            row.mean_latency = m.mean_latency();
            row.mean_latency_minus_waiting = m.mean_latency_minus_waiting();
            row.mean_max_workload = m.mean_max_workload();
            row.final_max_workload = m.final_max;
            row.jobs_a = static_cast<double>(m.count(JobTag::A));
            row.jobs_b = static_cast<double>(m.count(JobTag::B));
            row.jobs_c = static_cast<double>(m.count(JobTag::C));
            detail::fill_bounds(row);
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    });

    GridResult result;
    result.cell_count = cells.size();
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        std::vector<GridRow> group(seed_rows.begin() + static_cast<std::ptrdiff_t>(cell * per_cell),
                                   seed_rows.begin() + static_cast<std::ptrdiff_t>((cell + 1) * per_cell));
        for (const auto& r : group) result.rows.push_back(r);
        result.rows.push_back(detail::aggregate(group, cell, cells[cell]));
    }
    return result;
}

inline constexpr const char* kGridColumns =
    "kind,cell,seed,N,d,K,lambda,lambda_over_K,x,horizon,warmup,status,"
    "sync_fraction,sync_fraction_ci,mean_W,mean_W_ci,mean_T,mean_T_ci,"
    "mean_T_minus_W,mean_T_minus_W_ci,mean_max_workload,final_max_workload,"
    "jobs_A,jobs_B,jobs_C,waiting_time_upper_bound,latency_upper_bound,sync_fraction_lower";

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace detail

inline void write_grid_csv(const GridResult& result, std::ostream& out, bool deterministic) {
    using detail::num;
    if (!deterministic) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "# generated " << stamp << '\n';
    }
    out << kGridColumns << '\n';
    for (const GridRow& r : result.rows) {
        const ScenarioConfig& c = r.config;
        double lambda = 0.0;
        try {
            lambda = c.lambda();
        } catch (const ConfigError&) {
        }
        out << (r.seed ? "seed" : "aggregate") << ',' << r.cell << ','
            << (r.seed ? std::to_string(*r.seed) : std::string()) << ',' << c.servers << ',' << c.replicas << ','
            << num(c.scale) << ',' << num(lambda) << ',' << num(lambda / c.scale) << ',' << to_string(c.x.kind)
            << ',' << num(c.horizon) << ',' << num(c.warmup()) << ',' << detail::csv_text(r.status) << ','
            << num(r.sync_fraction) << ',' << num(r.sync_fraction_ci) << ',' << num(r.mean_waiting) << ','
            << num(r.mean_waiting_ci) << ',' << num(r.mean_latency) << ',' << num(r.mean_latency_ci) << ','
            << num(r.mean_latency_minus_waiting) << ',' << num(r.mean_latency_minus_waiting_ci) << ','
            << num(r.mean_max_workload) << ',' << num(r.final_max_workload) << ',' << num(r.jobs_a) << ','
            << num(r.jobs_b) << ',' << num(r.jobs_c) << ',' << num(r.waiting_time_upper_bound) << ','
            << num(r.latency_upper_bound) << ',' << num(r.sync_fraction_lower) << '\n';
    }
}

inline void write_grid_csv(const GridResult& result, const std::string& path, bool deterministic) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_grid_csv(result, out, deterministic);
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace redsched
