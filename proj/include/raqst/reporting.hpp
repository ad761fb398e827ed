// reporting.hpp: bounds, the improvement index, aggregation of trial records
// and the bit-stable CSV result files.

#pragma once

#include "raqst/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

namespace raqst {

// Gill-Massar bound on the mean squared Bures distance, (d+1)^2 (d-1) / (4N);
// infidelity shares it to first order.
inline double gill_massar_bound(int d, std::int64_t n) {
    if (d < 2 || n < 1) throw std::invalid_argument("gill_massar_bound: need d >= 2 and n >= 1");
    const double dd = d;
    return (dd + 1.0) * (dd + 1.0) * (dd - 1.0) / (4.0 * static_cast<double>(n));
}

// (C - A) / (C - G) on log10 values; nothing when C == G.
inline std::optional<double> improvement_index(double c, double a, double g) {
    if (c == g) return std::nullopt;
    return (c - a) / (c - g);
}

struct SweepRow {
    std::string protocol;
    std::int64_t n_copies = 0;
    int reps = 0;
    double mean_infidelity = 0.0;
    double sd_of_mean = 0.0;
    double purity_true = 0.0;
    double gm_bound = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

// Groups by (protocol, N, true purity); rows ordered by protocol (enum order),
// then N, then purity. Within a group trials are reduced in seed order, so
// the result does not depend on the order records arrive in.
inline std::vector<SweepRow> aggregate(std::vector<TrialRecord> records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no trial records");
    std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tie(a.protocol, a.n, a.purity_true, a.seed) < std::tie(b.protocol, b.n, b.purity_true, b.seed);
    });
    std::vector<SweepRow> rows;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        std::vector<double> values;
        while (j < records.size() && records[j].protocol == records[i].protocol && records[j].n == records[i].n &&
               records[j].purity_true == records[i].purity_true) {
            values.push_back(records[j].infidelity);
            ++j;
        }
        const auto stats = mean_and_sd_of_mean(values);
        rows.push_back(SweepRow{to_string(records[i].protocol), records[i].n, static_cast<int>(values.size()),
                                stats.mean, stats.sd_of_mean, records[i].purity_true,
                                gill_massar_bound(4, records[i].n)});
        i = j;
    }
    return rows;
}

// --------------------------- file output ------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error(context + ": cannot parse number '" + s + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& context) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error(context + ": cannot parse integer '" + s + "'");
    return v;
}

// Writes to `path`.tmp and renames, so readers never see a partial file.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline const char* kSweepHeader = "protocol,n_copies,reps,mean_infidelity,sd_of_mean,purity_true,gm_bound";

inline std::string results_csv(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) {
        out += r.protocol + "," + std::to_string(r.n_copies) + "," + std::to_string(r.reps) + "," +
               format_double(r.mean_infidelity) + "," + format_double(r.sd_of_mean) + "," +
               format_double(r.purity_true) + "," + format_double(r.gm_bound) + "\n";
    }
    return out;
}

inline void write_results(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
    write_file_atomically(path, results_csv(rows));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline std::vector<SweepRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<SweepRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw std::runtime_error(ctx + ": expected 7 fields");
        rows.push_back(SweepRow{f[0], parse_int(f[1], ctx), static_cast<int>(parse_int(f[2], ctx)),
                                parse_double(f[3], ctx), parse_double(f[4], ctx), parse_double(f[5], ctx),
                                parse_double(f[6], ctx)});
    }
    return rows;
}

// Per-state improvement index from paired cube / adaptive runs.
struct UpsilonRow {
    std::string state_class; // "mes" or "pure"
    int state_index = 0;
    std::string protocol;    // the adaptive protocol
    std::int64_t n_copies = 0;
    int reps = 0;
    double mean_infidelity_cube = 0.0;
    double mean_infidelity_adaptive = 0.0;
    double gm_bound = 0.0;
    std::optional<double> upsilon;
};

inline UpsilonRow make_upsilon_row(std::string state_class, int index, std::string protocol, std::int64_t n,
                                   int reps, double cube_mean, double adaptive_mean) {
    const double g = gill_massar_bound(4, n);
    return UpsilonRow{std::move(state_class), index, std::move(protocol), n, reps, cube_mean, adaptive_mean, g,
                      improvement_index(std::log10(cube_mean), std::log10(adaptive_mean), std::log10(g))};
}

inline const char* kUpsilonHeader =
    "state_class,state_index,protocol,n_copies,reps,mean_infidelity_cube,mean_infidelity_adaptive,gm_bound,upsilon";

inline std::string upsilon_csv(const std::vector<UpsilonRow>& rows) {
    std::string out = std::string(kUpsilonHeader) + "\n";
    for (const auto& r : rows) {
        out += r.state_class + "," + std::to_string(r.state_index) + "," + r.protocol + "," +
               std::to_string(r.n_copies) + "," + std::to_string(r.reps) + "," +
               format_double(r.mean_infidelity_cube) + "," + format_double(r.mean_infidelity_adaptive) + "," +
               format_double(r.gm_bound) + "," + (r.upsilon ? format_double(*r.upsilon) : std::string()) + "\n";
    }
    return out;
}

inline void write_upsilon(const std::vector<UpsilonRow>& rows, const std::filesystem::path& path) {
    write_file_atomically(path, upsilon_csv(rows));
}

} // namespace raqst
