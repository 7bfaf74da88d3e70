// redsched: command-line front end for the redundancy-d simulator and bounds.
//
// Exit codes: 0 success, 1 configuration error, 2 property violation, 3 IO error.

#include "redsched/redsched.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
using namespace redsched;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitViolation = 2;
constexpr int kExitIo = 3;

struct ScenarioArgs {
    std::string file;
    std::string preset;
    std::optional<int> servers;
    std::optional<int> replicas;
    std::optional<double> scale;
    std::optional<double> lambda;
    std::optional<double> lambda_over_scale;
    std::optional<std::string> x;
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon;
    std::optional<double> warmup;

    void attach(CLI::App* app, bool with_file = true) {
        if (with_file) app->add_option("scenario", file, "TOML scenario file");
        app->add_option("--preset", preset, "built-in preset (fig2, fig3, fig4, fig5)");
        app->add_option("--N", servers, "number of servers");
        app->add_option("--d", replicas, "replicas per job");
        app->add_option("--K", scale, "scale of the service requirement");
        app->add_option("--lambda", lambda, "arrival rate");
        app->add_option("--lambda-over-K", lambda_over_scale, "arrival rate relative to K");
        app->add_option("--x", x, "X distribution: deterministic, exponential, uniform02");
        app->add_option("--seed", seed, "single seed (replaces the scenario's seed list)");
        app->add_option("--horizon", horizon, "simulated time horizon");
        app->add_option("--warmup", warmup, "warmup excluded from averages (default 10% of horizon)");
    }

    ScenarioConfig build() const {
        ScenarioConfig c;
        if (!preset.empty()) c = preset_scenario(preset);
        if (!file.empty()) {
            const toml::table table = parse_toml_file(file);
            if (const auto p = table["preset"].value<std::string>()) c = preset_scenario(*p);
            apply_scenario_table(table, c);
        }
        overlay(c);
        return c;
    }

    void overlay(ScenarioConfig& c) const {
        if (servers) c.servers = *servers;
        if (replicas) c.replicas = *replicas;
        if (scale) c.scale = *scale;
        if (lambda && lambda_over_scale) throw ConfigError("set only one of --lambda and --lambda-over-K");
        if (lambda) {
            c.arrival_rate = *lambda;
            c.arrival_rate_over_scale.reset();
        }
        if (lambda_over_scale) {
            c.arrival_rate_over_scale = *lambda_over_scale;
            c.arrival_rate.reset();
        }
        if (x) c.x = XSpec::of(parse_x_kind(*x));
        if (seed) c.seeds = {*seed};
        if (horizon) c.horizon = *horizon;
        if (warmup) c.warmup_time = *warmup;
    }
};

json config_json(const ScenarioConfig& c) {
    json j;
    j["N"] = c.servers;
    j["d"] = c.replicas;
    j["K"] = c.scale;
    j["lambda"] = c.lambda();
    j["lambda_over_K"] = c.lambda() / c.scale;
    j["x"] = std::string(to_string(c.x.kind));
    j["horizon"] = c.horizon;
    j["warmup"] = c.warmup();
    j["seeds"] = c.seeds;
    return j;
}

json metrics_json(const SimMetrics& m) {
    json j;
    j["sync_fraction"] = m.sync_fraction();
    j["mean_W"] = m.mean_waiting();
    j["mean_T"] = m.mean_latency();
    j["mean_T_minus_W"] = m.mean_latency_minus_waiting();
    j["mean_max_workload"] = m.mean_max_workload();
    j["final_max_workload"] = m.final_max;
    j["jobs"] = {{"A", m.count(JobTag::A)}, {"B", m.count(JobTag::B)}, {"C", m.count(JobTag::C)}};
    return j;
}

json ci_json(const MeanCi& ci) { return {{"mean", ci.mean}, {"ci95", ci.half_width}, {"n", ci.n}}; }

json bounds_json(const ScenarioConfig& c, std::optional<double> surplus_override) {
    json j;
    const StabilityReport s = sufficient_condition(c);
    j["stability"] = {{"rho", s.rho},
                      {"reduced_load", s.reduced_load},
                      {"sufficient_stable", s.sufficient_stable},
                      {"capacity_estimate", s.capacity_estimate}};
    const Mg1Params p = mg1_params(c);
    j["mg1"] = {{"lambda_mg1", p.lambda_mg1}, {"mean_b", p.mean_b}, {"mean_b2", p.mean_b2}};
    if (s.sufficient_stable) {
        const LatencyBound lat = latency_upper_bound(c);
        j["waiting_time_upper_bound"] = lat.waiting;
        j["latency_upper_bound"] = lat.latency;
        j["latency_upper_bound_loose"] = lat.loose_latency;
        j["mean_min_service"] = lat.mean_min_service;
    } else {
        j["waiting_time_upper_bound"] = nullptr;
        j["latency_upper_bound"] = nullptr;
    }
    const BoundReport b = sync_fraction_bound(c, surplus_override);
    json r;
    r["e_tau1"] = b.e_tau1;
    r["assumption_ok"] = b.assumption_ok;
    r["e_jumps_upper"] = b.e_jumps_upper;
    r["surplus_used"] = b.surplus_used;
    r["surplus_convention"] = b.default_surplus ? "mean post-jump surplus (N-d) E[min X] K" : "caller supplied";
    if (b.assumption_ok) {
        r["e_tau2_upper"] = b.e_tau2_upper;
        r["e_upward_jumps"] = b.e_upward_jumps;
        r["sync_fraction_lower"] = b.sync_fraction_lower;
    } else {
        r["e_tau2_upper"] = nullptr;
        r["sync_fraction_lower"] = nullptr;
    }
    j["sync_fraction_bound"] = r;
    return j;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw IoError("cannot open " + path + " for writing");
    return file;
}

int cmd_simulate(const ScenarioArgs& args, unsigned workers) {
    const ScenarioConfig c = args.build();
    c.validate();
    std::vector<SimMetrics> runs(c.seeds.size());
    parallel_for(runs.size(), workers, [&](std::size_t i) { runs[i] = run_simulation(c, c.seeds[i]); });
    json out;
    out["config"] = config_json(c);
    json arr = json::array();
    std::vector<double> sf, w, t, tw;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        json r = metrics_json(runs[i]);
        r["seed"] = c.seeds[i];
        arr.push_back(r);
        sf.push_back(runs[i].sync_fraction());
        w.push_back(runs[i].mean_waiting());
        t.push_back(runs[i].mean_latency());
        tw.push_back(runs[i].mean_latency_minus_waiting());
    }
    out["runs"] = arr;
    out["aggregate"] = {{"sync_fraction", ci_json(mean_ci95(sf))},
                        {"mean_W", ci_json(mean_ci95(w))},
                        {"mean_T", ci_json(mean_ci95(t))},
                        {"mean_T_minus_W", ci_json(mean_ci95(tw))}};
    out["bounds"] = bounds_json(c, std::nullopt);
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_grid(const std::string& file, const ScenarioArgs& args, const std::string& out_path,
             std::optional<unsigned> workers, bool deterministic) {
    GridSpec g;
    if (!args.preset.empty()) g = preset_grid(args.preset);
    if (!file.empty()) {
        const toml::table table = parse_toml_file(file);
        GridSpec parsed = parse_grid(table);
        if (args.preset.empty() || table["preset"]) {
            g = std::move(parsed);
        } else {
            apply_scenario_table(table, g.base);
        }
    }
    if (args.preset.empty() && file.empty()) throw ConfigError("grid needs a TOML file or --preset");
    args.overlay(g.base);
    if (workers) g.workers = *workers;
    g.deterministic = g.deterministic || deterministic;
    if (!out_path.empty()) g.output = out_path;
    std::cerr << "grid: " << g.cell_count() << " cells x " << g.base.seeds.size() << " seeds\n";
    const GridResult result = run_grid(g);
    std::ofstream file_out;
    std::ostream& os = open_out(g.output, file_out);
    write_grid_csv(result, os, g.deterministic);
    if (!os) throw IoError("failed writing grid output");
    return kExitOk;
}

int cmd_coupled(const ScenarioArgs& args, const std::string& out_path, std::optional<std::size_t> max_events,
                double gap_tolerance, bool strict) {
    ScenarioArgs a = args;
    if (a.preset.empty() && a.file.empty()) a.preset = "fig2";
    const ScenarioConfig c = a.build();
    CoupledOptions options;
    options.record_trace = !out_path.empty();
    if (max_events) options.max_events = *max_events;
    options.gap_tolerance = gap_tolerance;
    options.strict = strict;
    const CoupledResult r = run_coupled(c, c.seeds.front(), c.horizon, options);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot open " + out_path + " for writing");
        write_trace_csv(r.trace, f);
        if (!f) throw IoError("failed writing " + out_path);
    }
    json j;
    j["config"] = config_json(c);
    j["events"] = r.summary.events;
    j["max_violations"] = r.summary.max_violations;
    j["gap_violations"] = r.summary.gap_violations;
    j["surplus_violations"] = r.summary.surplus_violations;
    j["jump_rule_violations"] = r.summary.jump_rule_violations;
    j["passed"] = r.summary.passed();
    j["original_sync_fraction"] = r.original.sync_fraction();
    j["auxiliary_sync_fraction"] = r.auxiliary.sync_fraction();
    if (r.summary.first_violation) j["first_violation"] = *r.summary.first_violation;
    std::cout << j.dump(2) << '\n';
    return r.summary.passed() ? kExitOk : kExitViolation;
}

int cmd_bounds(const ScenarioArgs& args, std::optional<double> surplus_override) {
    const ScenarioConfig c = args.build();
    c.validate();
    json j;
    j["config"] = config_json(c);
    j.update(bounds_json(c, surplus_override));
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_scan(const ScenarioArgs& args, std::vector<double> lambdas, std::vector<double> bracket, int iterations,
             const std::string& out_path) {
    ScenarioConfig c = args.build();
    if (!c.arrival_rate && !c.arrival_rate_over_scale) c.arrival_rate = 1.0;  // overridden per test
    c.validate();
    ScanOptions options;
    options.horizon = c.horizon;
    options.seed = c.seeds.front();
    ScanResult r;
    if (!bracket.empty()) {
        if (bracket.size() != 2) throw ConfigError("--bracket takes two values");
        r = stability_scan_bisect(c, bracket[0], bracket[1], iterations, options);
    } else {
        if (lambdas.empty()) throw ConfigError("scan needs --lambdas or --bracket");
        r = stability_scan(c, lambdas, options);
    }
    json summary;
    summary["analytical_capacity"] = r.analytical_capacity;
    summary["capacity_estimate"] = r.capacity_estimate ? json(*r.capacity_estimate) : json(nullptr);
    summary["all_inconclusive"] = r.all_inconclusive;
    if (out_path.empty() || out_path == "-") {
        write_scan_csv(r, std::cout);
        std::cout << "# " << summary.dump() << '\n';
    } else {
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot open " + out_path + " for writing");
        write_scan_csv(r, f);
        if (!f) throw IoError("failed writing " + out_path);
        std::cout << summary.dump(2) << '\n';
    }
    if (r.all_inconclusive) std::cerr << "scan: every verdict inconclusive, no capacity estimate\n";
    return kExitOk;
}

int cmd_renewal(const std::string& x, double t, std::size_t mc_paths, std::uint64_t seed) {
    const XSpec spec = XSpec::of(parse_x_kind(x));
    json j;
    j["x"] = std::string(to_string(spec.kind));
    j["t"] = t;
    j["m"] = renewal_function(spec, t);
    if (mc_paths > 0) {
        Rng rng(seed);
        const Estimate e = renewal_function_mc(spec, t, mc_paths, rng);
        j["mc"] = {{"estimate", e.value}, {"standard_error", e.standard_error}, {"paths", mc_paths}};
    }
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Redundancy-d cancel-on-completion simulator and bounds"};
    app.require_subcommand(1);

    unsigned workers_default = 1;
    std::optional<unsigned> workers;
    bool deterministic = false;
    std::string out_path;

    ScenarioArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "simulate one scenario, metrics JSON to stdout");
    sim_args.attach(simulate);
    simulate->add_option("--workers", workers_default, "concurrent seeds");

    ScenarioArgs grid_args;
    std::string grid_file;
    auto* grid = app.add_subcommand("grid", "run a TOML grid, CSV to --out or stdout");
    grid->add_option("grid", grid_file, "TOML grid file");
    grid_args.attach(grid, false);
    grid->add_option("--workers", workers, "concurrent cells");
    grid->add_flag("--deterministic", deterministic, "omit the timestamp header line");
    grid->add_option("--out", out_path, "output CSV path");

    ScenarioArgs coupled_args;
    std::optional<std::size_t> max_events;
    std::string trace_path;
    auto* coupled = app.add_subcommand("coupled", "coupled original/auxiliary/M-G-1 run, trace CSV");
    coupled_args.attach(coupled);
    coupled->add_option("--out", trace_path, "trace CSV path");
    coupled->add_option("--max-events", max_events, "stop after this many arrivals");
    double gap_tolerance = CoupledOptions{}.gap_tolerance;
    bool strict = false;
    coupled->add_option("--gap-tolerance", gap_tolerance,
                        "relative slack of the gap check (negative values demand a strict margin)");
    coupled->add_flag("--strict", strict, "stop at the first violation");

    ScenarioArgs bounds_args;
    std::optional<double> surplus_override;
    auto* bounds = app.add_subcommand("bounds", "analytical bounds, JSON to stdout");
    bounds_args.attach(bounds);
    bounds->add_option("--surplus", surplus_override, "starting auxiliary surplus for the sync bound");

    ScenarioArgs scan_args;
    std::vector<double> lambdas, bracket;
    int iterations = 6;
    std::string scan_out;
    auto* scan = app.add_subcommand("scan", "stability scan over arrival rates");
    scan_args.attach(scan);
    scan->add_option("--lambdas", lambdas, "arrival rates to test")->delimiter(',');
    scan->add_option("--bracket", bracket, "bisection bracket LO HI")->expected(2);
    scan->add_option("--iterations", iterations, "bisection steps");
    scan->add_option("--out", scan_out, "verdict CSV path");

    std::string renewal_x = "deterministic";
    double renewal_t = 0.0;
    std::size_t mc_paths = 0;
    std::uint64_t renewal_seed = 1;
    auto* renewal = app.add_subcommand("renewal", "renewal function m(t)");
    renewal->add_option("--x", renewal_x, "X distribution")->required();
    renewal->add_option("--t", renewal_t, "argument t >= 0")->required();
    renewal->add_option("--mc", mc_paths, "also estimate by Monte Carlo with this many paths");
    renewal->add_option("--seed", renewal_seed, "Monte-Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(sim_args, workers_default);
        if (*grid) return cmd_grid(grid_file, grid_args, out_path, workers, deterministic);
        if (*coupled) return cmd_coupled(coupled_args, trace_path, max_events, gap_tolerance, strict);
        if (*bounds) return cmd_bounds(bounds_args, surplus_override);
        if (*scan) return cmd_scan(scan_args, lambdas, bracket, iterations, scan_out);
        if (*renewal) return cmd_renewal(renewal_x, renewal_t, mc_paths, renewal_seed);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const PropertyViolation& e) {
        std::cerr << "violation: " << e.what() << '\n';
        return kExitViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
