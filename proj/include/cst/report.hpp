#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cst/detectors.hpp"
#include "cst/error.hpp"

namespace cst {

inline nlohmann::ordered_json result_to_json(const AuditReport& rep,
                                             const std::string& attr,
                                             const TestResult& r) {
    nlohmann::ordered_json j;
    j["method"] = to_string(rep.method);
    j["mode"] = to_string(rep.mode);
    j["direction"] = to_string(rep.direction);
    j["run"] = rep.attr;  // report label; differs from attr on per-attribute rows
    j["attr"] = attr;
    j["k"] = rep.k;
    j["alpha"] = rep.alpha;
    j["tau"] = rep.tau;
    j["complainant"] = r.complainant;
    auto num = [](double v) {
        return std::isnan(v) ? nlohmann::ordered_json(nullptr)
                             : nlohmann::ordered_json(v);
    };
    j["p_c"] = num(r.p_c);
    j["p_t"] = num(r.p_t);
    j["delta_p"] = num(r.delta_p);
    j["ci_lo"] = num(r.ci_lo);
    j["ci2_lo"] = num(r.ci2_lo);
    j["ci2_hi"] = num(r.ci2_hi);
    j["m"] = r.m;
    j["detected"] = r.detected;
    j["significant"] = r.significant;
    if (r.saturated) j["saturated"] = true;
    if (r.degenerate) j["degenerate"] = true;
    j["y"] = r.y;
    if (r.y_cf >= 0) j["y_cf"] = r.y_cf;
    return j;
}

// One record per complainant per method; multiple-mode reports also carry
// the per-attribute records that back each combined decision.
inline void write_jsonl(const AuditReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    for (const auto& [attr, results] : rep.per_attr)
        for (const auto& r : results) out << result_to_json(rep, attr, r).dump() << '\n';
    for (const auto& r : rep.results)
        out << result_to_json(rep, rep.attr, r).dump() << '\n';
}

struct SummaryRow {
    std::string method;
    std::string mode;
    std::string direction;
    std::string attr;
    int k = 0;
    int complainants = 0;
    int detected = 0;
    double detected_pct = 0.0;
    int significant = 0;
    double significant_pct = 0.0;
    double avg_delta_p = std::numeric_limits<double>::quiet_NaN();
};

inline SummaryRow summary_row(const AuditReport& rep) {
    SummaryRow row;
    row.method = to_string(rep.method);
    row.mode = to_string(rep.mode);
    row.direction = to_string(rep.direction);
    row.attr = rep.attr;
    row.k = rep.k;
    row.complainants = rep.summary.complainants;
    row.detected = rep.summary.detected;
    row.detected_pct = rep.summary.detected_pct;
    row.significant = rep.summary.significant;
    row.significant_pct = rep.summary.significant_pct;
    row.avg_delta_p = rep.summary.avg_delta_p;
    return row;
}

inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

inline std::string format_avg(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Consolidated summary, one row per (method, mode, attr, k): raw counts plus
// percentages w.r.t. the protected group, paper-table style.
inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    csv::write_row(out, {"method", "mode", "direction", "attr", "k", "complainants",
                         "detected", "detected_pct", "significant", "significant_pct",
                         "avg_delta_p"});
    for (const auto& r : rows)
        csv::write_row(out, {r.method, r.mode, r.direction, r.attr, std::to_string(r.k),
                             std::to_string(r.complainants), std::to_string(r.detected),
                             format_pct(r.detected_pct), std::to_string(r.significant),
                             format_pct(r.significant_pct), format_avg(r.avg_delta_p)});
}

// Long-format sweep output, one row per (method, k).
inline void write_sweep_csv(const std::vector<SummaryRow>& rows,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    csv::write_row(out, {"method", "attr", "k", "detected", "significant",
                         "avg_delta_p"});
    for (const auto& r : rows)
        csv::write_row(out, {r.method, r.attr, std::to_string(r.k),
                             std::to_string(r.detected), std::to_string(r.significant),
                             format_avg(r.avg_delta_p)});
}

// Recomputes summary rows from JSONL records; lets `report` rebuild the
// summary table and tests verify summary/JSONL consistency.
inline std::vector<SummaryRow> summarize_jsonl_dir(const std::string& dir) {
    struct Key {
        std::string method, mode, direction, attr;
        int k;
        bool operator<(const Key& o) const {
            return std::tie(method, mode, direction, attr, k) <
                   std::tie(o.method, o.mode, o.direction, o.attr, o.k);
        }
    };
    struct Acc {
        int complainants = 0, detected = 0, significant = 0;
        double sum_delta = 0.0;
        int n_delta = 0;
    };
    std::map<Key, Acc> acc;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const std::string mode = j.at("mode").get<std::string>();
            const std::string run = j.value("run", j.at("attr").get<std::string>());
            const std::string attr = j.at("attr").get<std::string>();
            Key key{j.at("method").get<std::string>(), mode,
                    j.at("direction").get<std::string>(), run, j.at("k").get<int>()};
            Acc& a = acc[key];
            const bool combined_row = attr == run;
            const bool detected = j.at("detected").get<bool>();
            if (combined_row) {
                ++a.complainants;
                if (detected) ++a.detected;
                if (j.at("significant").get<bool>()) ++a.significant;
            }
            // Multiple-mode averages pool the per-attribute detections; the
            // other modes average over the (combined) rows themselves.
            const bool pools = mode == "multiple";
            if (detected && (pools ? !combined_row : combined_row) &&
                !j.at("delta_p").is_null()) {
                a.sum_delta += j.at("delta_p").get<double>();
                ++a.n_delta;
            }
        }
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, a] : acc) {
        SummaryRow r;
        r.method = key.method;
        r.mode = key.mode;
        r.direction = key.direction;
        r.attr = key.attr;
        r.k = key.k;
        r.complainants = a.complainants;
        r.detected = a.detected;
        r.significant = a.significant;
        if (a.complainants) {
            r.detected_pct = 100.0 * a.detected / a.complainants;
            r.significant_pct = 100.0 * a.significant / a.complainants;
        }
        r.avg_delta_p = a.n_delta ? a.sum_delta / a.n_delta
                                  : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(r);
    }
    return rows;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_provenance(const nlohmann::ordered_json& manifest_json,
                             std::uint64_t seed, const std::string& version,
                             const std::string& path) {
    nlohmann::ordered_json j;
    j["artifact_version"] = version;
    j["seed"] = seed;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(manifest_json.dump())));
    j["manifest_hash"] = buf;
    j["manifest"] = manifest_json;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace cst
