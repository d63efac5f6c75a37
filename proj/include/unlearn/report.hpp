#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

// Wall-clock record for one pipeline phase. speedup_vs_retrain is negative
// where the comparison does not apply.
struct TimingRecord {
    std::string phase;
    double seconds = 0.0;
    double speedup_vs_retrain = -1.0;
};

inline json to_json(const TimingRecord& t) {
    json j{{"phase", t.phase}, {"seconds", t.seconds}};
    if (t.speedup_vs_retrain >= 0.0) j["speedup_vs_retrain"] = t.speedup_vs_retrain;
    return j;
}

// One record per line; records carry the run's config hash and master seed.
inline void write_jsonl(const std::vector<json>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    for (const auto& rec : records) {
        out << rec.dump() << '\n';
    }
    if (!out) throw FormatError("write failed for '" + path + "'");
}

inline std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::vector<json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(json::parse(line));
    }
    return records;
}

namespace detail {

// Timing keys are excluded from the determinism hash: wall-clock is the one
// field allowed to differ between identical runs.
inline bool is_timing_key(const std::string& key) {
    return key == "seconds" || key == "speedup_vs_retrain" || key == "speedup" ||
           key == "timings" || key == "time_cost" || key == "timestamp";
}

inline json strip_timing(const json& j) {
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (is_timing_key(it.key())) continue;
            out[it.key()] = strip_timing(it.value());
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(strip_timing(v));
        return out;
    }
    return j;
}

} // namespace detail

// FNV-1a over the canonical dump of the records with timing fields removed.
inline std::string report_hash(const std::vector<json>& records) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& rec : records) {
        const std::string dump = detail::strip_timing(rec).dump();
        h = fnv1a(dump.data(), dump.size(), h);
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Flat CSV: header then one row per record; missing fields stay empty.
inline void write_csv(const std::vector<json>& records, const std::vector<std::string>& columns,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.precision(17);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << columns[i] << (i + 1 < columns.size() ? ',' : '\n');
    }
    for (const auto& rec : records) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (rec.contains(columns[i])) {
                const auto& v = rec[columns[i]];
                if (v.is_string()) {
                    out << v.get<std::string>();
                } else {
                    out << v.dump();
                }
            }
            out << (i + 1 < columns.size() ? ',' : '\n');
        }
    }
    if (!out) throw FormatError("write failed for '" + path + "'");
}

} // namespace unlearn
