#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sekq/coupled.hpp"
#include "sekq/engine.hpp"
#include "sekq/spec_string.hpp"

namespace sekq {

/// CSV cell for a double; NaN prints empty.
inline std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_number(v); }

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << csv_quote(cells[i]);
    }
    os << '\n';
}

inline nlohmann::json to_json(const TraceRecord& r) {
    return {{"time", r.time},         {"kind", to_string(r.kind)}, {"job", r.job},
            {"ids", r.ids},           {"remaining", r.remaining},   {"served", r.served}};
}

inline TraceRecord trace_from_json(const nlohmann::json& j) {
    TraceRecord r;
    r.time = j.at("time").get<double>();
    const auto kind = j.at("kind").get<std::string>();
    for (int k = 0; k <= static_cast<int>(EventKind::End); ++k)
        if (kind == to_string(static_cast<EventKind>(k))) r.kind = static_cast<EventKind>(k);
    r.job = j.at("job").get<JobId>();
    r.ids = j.at("ids").get<std::vector<JobId>>();
    r.remaining = j.at("remaining").get<std::vector<double>>();
    r.served = j.at("served").get<std::vector<JobId>>();
    return r;
}

/// Trace sink writing one JSON object per line.
inline std::function<void(const TraceRecord&)> ndjson_trace(std::ostream& os) {
    return [&os](const TraceRecord& r) { os << to_json(r).dump() << '\n'; };
}

/// One violation with enough context to replay the run up to the offending event.
inline nlohmann::json to_json(const Violation& v, const CoupledResult& run, const std::string& workload, int k) {
    nlohmann::json j = {{"check", v.check},
                        {"detail", v.detail},
                        {"time", v.time},
                        {"event_index", v.event_index},
                        {"event", to_string(v.event)},
                        {"phase", to_string(v.phase)},
                        {"bA", v.bA},
                        {"bB", v.bB},
                        {"seed", run.seed},
                        {"k", k},
                        {"workload", workload},
                        {"x", run.params.x},
                        {"y", run.params.y},
                        {"eps", run.params.eps},
                        {"eps_prime", run.params.eps_prime}};
    if (v.episode) {
        j["episode"] = *v.episode;
        const auto& d = run.divergences[*v.episode];
        j["t_div"] = d.t_div;
        j["snapshot"] = d.snapshot;
        j["scenario"] = to_string(d.scenario);
    }
    return j;
}

}  // namespace sekq
