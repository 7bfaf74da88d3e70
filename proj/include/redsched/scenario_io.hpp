#pragma once

// TOML scenario and grid files, and the built-in presets.
//
// Scenario keys (all optional except where a preset does not supply them):
//   N, d, K, lambda | lambda_over_K, x, horizon, warmup, seeds,
//   initial_state = "empty" | [w_1, ..., w_N]
// Grid files use the same top-level keys plus
//   preset, output, workers, deterministic, and a [sweep] table with any of
//   N = [...], K = [...], lambda_over_K = [...].

#include "redsched/config.hpp"
#include "redsched/errors.hpp"

#include <toml++/toml.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace redsched {

struct GridSpec {
    ScenarioConfig base;
    std::vector<int> servers_values;
    std::vector<double> scale_values;
    std::vector<double> lambda_over_scale_values;
    std::string output;
    std::string preset;
    unsigned workers = 1;
    bool deterministic = false;

    std::size_t cell_count() const {
        auto len = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
        return len(servers_values.size()) * len(scale_values.size()) * len(lambda_over_scale_values.size());
    }
};

inline std::vector<std::uint64_t> default_seeds(std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = i + 1;
    return seeds;
}

// Scenario presets named after the figure setups they encode. fig2 is a
// single coupled-trace scenario; fig3/fig4/fig5 are grids.
inline ScenarioConfig preset_scenario(std::string_view name) {
    ScenarioConfig c;
    c.replicas = 2;
    c.x = XSpec::deterministic();
    c.horizon = 2.0e4;
    c.seeds = default_seeds(8);
    if (name == "fig2") {
        c.servers = 8;
        c.scale = 100.0;
        c.arrival_rate = 50.0;
        c.horizon = 1.0e3;
        c.seeds = {1};
        return c;
    }
    if (name == "fig3" || name == "fig4" || name == "fig5") {
        c.servers = 4;
        c.scale = 100.0;
        c.arrival_rate_over_scale = 0.5;
        return c;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig2, fig3, fig4 or fig5)");
}

inline GridSpec preset_grid(std::string_view name) {
    GridSpec g;
    g.base = preset_scenario(name);
    g.preset = std::string(name);
    if (name == "fig2") {
        return g;
    }
    g.servers_values = {2, 4, 8};
    g.scale_values = {10.0, 20.0, 50.0, 100.0, 200.0};
    if (name == "fig5") {
        g.lambda_over_scale_values = {0.5};
    } else {
        g.lambda_over_scale_values = {0.5, 0.9};
    }
    return g;
}

namespace detail {

template <class T>
std::vector<T> toml_array(const toml::node_view<const toml::node>& node, std::string_view key) {
    std::vector<T> out;
    const toml::array* arr = node.as_array();
    if (arr == nullptr) throw ConfigError(std::string(key) + " must be an array");
    for (const auto& el : *arr) {
        const auto v = el.value<T>();
        if (!v) throw ConfigError(std::string(key) + " has an entry of the wrong type");
        out.push_back(*v);
    }
    return out;
}

template <class T>
T toml_scalar(const toml::node_view<const toml::node>& node, std::string_view key) {
    const auto v = node.value<T>();
    if (!v) throw ConfigError(std::string(key) + " has the wrong type");
    return *v;
}

}  // namespace detail

// Overlays the scenario keys present in `table` onto `c`.
inline void apply_scenario_table(const toml::table& t, ScenarioConfig& c) {
    if (t["N"]) c.servers = detail::toml_scalar<int>(t["N"], "N");
    if (t["d"]) c.replicas = detail::toml_scalar<int>(t["d"], "d");
    if (t["K"]) c.scale = detail::toml_scalar<double>(t["K"], "K");
    if (t["lambda"]) {
        c.arrival_rate = detail::toml_scalar<double>(t["lambda"], "lambda");
        c.arrival_rate_over_scale.reset();
    }
    if (t["lambda_over_K"]) {
        c.arrival_rate_over_scale = detail::toml_scalar<double>(t["lambda_over_K"], "lambda_over_K");
        if (t["lambda"]) throw ConfigError("set only one of lambda and lambda_over_K");
        c.arrival_rate.reset();
    }
    if (t["x"]) c.x = XSpec::of(parse_x_kind(detail::toml_scalar<std::string>(t["x"], "x")));
    if (t["horizon"]) c.horizon = detail::toml_scalar<double>(t["horizon"], "horizon");
    if (t["warmup"]) c.warmup_time = detail::toml_scalar<double>(t["warmup"], "warmup");
    if (t["seeds"]) {
        c.seeds.clear();
        for (auto s : detail::toml_array<std::int64_t>(t["seeds"], "seeds")) {
            c.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    }
    if (t["initial_state"]) {
        if (t["initial_state"].is_string()) {
            const auto s = detail::toml_scalar<std::string>(t["initial_state"], "initial_state");
            if (s != "empty") throw ConfigError("initial_state must be \"empty\" or an array");
            c.initial_state.reset();
        } else {
            c.initial_state = detail::toml_array<double>(t["initial_state"], "initial_state");
        }
    }
}

inline toml::table parse_toml_file(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw IoError("cannot read " + path);
    try {
        return toml::parse_file(path);
    } catch (const toml::parse_error& e) {
        throw ConfigError("malformed TOML in " + path + ": " + std::string(e.description()));
    }
}

inline ScenarioConfig parse_scenario(const toml::table& table) {
    ScenarioConfig c;
    if (const auto preset = table["preset"].value<std::string>()) c = preset_scenario(*preset);
    apply_scenario_table(table, c);
    return c;
}

inline ScenarioConfig parse_scenario_string(std::string_view text) {
    try {
        return parse_scenario(toml::parse(text));
    } catch (const toml::parse_error& e) {
        throw ConfigError("malformed TOML: " + std::string(e.description()));
    }
}

inline GridSpec parse_grid(const toml::table& t) {
    GridSpec g;
    if (const auto preset = t["preset"].value<std::string>()) g = preset_grid(*preset);
    apply_scenario_table(t, g.base);
    if (t["output"]) g.output = detail::toml_scalar<std::string>(t["output"], "output");
    if (t["workers"]) g.workers = static_cast<unsigned>(detail::toml_scalar<std::int64_t>(t["workers"], "workers"));
    if (t["deterministic"]) g.deterministic = detail::toml_scalar<bool>(t["deterministic"], "deterministic");
    if (const toml::table* sweep = t["sweep"].as_table()) {
        const toml::table& s = *sweep;
        if (s["N"]) g.servers_values = detail::toml_array<int>(s["N"], "sweep.N");
        if (s["K"]) g.scale_values = detail::toml_array<double>(s["K"], "sweep.K");
        if (s["lambda_over_K"]) {
            g.lambda_over_scale_values = detail::toml_array<double>(s["lambda_over_K"], "sweep.lambda_over_K");
        }
    }
    return g;
}

inline GridSpec parse_grid_string(std::string_view text) {
    try {
        return parse_grid(toml::parse(text));
    } catch (const toml::parse_error& e) {
        throw ConfigError("malformed TOML: " + std::string(e.description()));
    }
}

}  // namespace redsched
