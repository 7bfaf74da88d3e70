#pragma once

#include "redsched/auxiliary.hpp"
#include "redsched/errors.hpp"

#include <fstream>
#include <ostream>
#include <string>

namespace redsched {

inline constexpr const char* kTraceColumns =
    "event,time,tag,surplus,aux_surplus,max_workload,aux_max_workload,mg1_workload,max_bounded,gaps_dominated";

inline void write_trace_csv(const std::vector<CoupledRecord>& trace, std::ostream& out) {
    out << kTraceColumns << '\n';
    out.precision(12);
    for (const auto& r : trace) {
        out << r.index << ',' << r.time << ',' << to_string(r.tag) << ',' << r.surplus << ',' << r.aux_surplus
            << ',' << r.original_sorted.front() << ',' << r.auxiliary_sorted.front() << ',' << r.mg1_workload
            << ',' << (r.max_bounded ? 1 : 0) << ',' << (r.gaps_dominated ? 1 : 0) << '\n';
    }
}

// Runs the coupled systems and writes one CSV row per event.
inline CoupledSummary export_coupled_trace(const ScenarioConfig& config, std::uint64_t seed, double horizon,
                                           const std::string& path) {
    CoupledOptions options;
    options.record_trace = true;
    const CoupledResult result = run_coupled(config, seed, horizon, options);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_trace_csv(result.trace, out);
    if (!out) throw IoError("failed writing " + path);
    return result.summary;
}

}  // namespace redsched
