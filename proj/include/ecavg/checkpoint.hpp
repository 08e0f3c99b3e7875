#pragma once

// Checkpoint files for prime sweeps: one CSV row per PrimeAggregate plus a
// JSON sidecar at <path>.meta.json describing the run.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "ecavg/family.hpp"

namespace ecavg {

class checkpoint_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr int checkpoint_schema_version = 1;
inline constexpr std::string_view checkpoint_header = "p,main_term_contrib,howe_max_dev,census_json";

struct CheckpointMeta {
    std::string function;
    double x_max = 0.0;
    int schema_version = checkpoint_schema_version;

    friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

/// Shortest decimal that reads back to the same double.
inline std::string format_real(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_real_exact(std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad real '" + std::string(s) + "'");
    return v;
}

inline u64 parse_u64_exact(std::string_view s) {
    u64 v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + std::string(s) + "'");
    return v;
}

inline std::filesystem::path meta_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

/// Census as a compact JSON object {"d": count, ...}, doubled quotes for CSV.
inline std::string census_field(const std::map<u64, u64>& census) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [d, n] : census) j[std::to_string(d)] = n;
    std::string s = j.dump(), out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

inline std::string aggregate_row(const PrimeAggregate& a) {
    return std::to_string(a.p) + ',' + format_real(a.main_term_contrib) + ',' + format_real(a.howe_max_dev) + ',' +
           census_field(a.census);
}

inline PrimeAggregate parse_aggregate_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw std::invalid_argument("unterminated quote");
    fields.push_back(std::move(cur));
    if (fields.size() != 4) throw std::invalid_argument("expected 4 fields, got " + std::to_string(fields.size()));
    PrimeAggregate a;
    a.p = parse_u64_exact(fields[0]);
    a.main_term_contrib = parse_real_exact(fields[1]);
    a.howe_max_dev = parse_real_exact(fields[2]);
    const auto j = nlohmann::json::parse(fields[3]);
    if (!j.is_object()) throw std::invalid_argument("census is not a JSON object");
    for (const auto& [k, v] : j.items()) a.census[parse_u64_exact(k)] = v.get<u64>();
    return a;
}

inline void write_meta(const std::filesystem::path& path, const CheckpointMeta& meta) {
    std::ofstream out(meta_path(path));
    if (!out) throw checkpoint_error("cannot write " + meta_path(path).string());
    const nlohmann::ordered_json j = {
        {"function", meta.function}, {"x_max", meta.x_max}, {"schema_version", meta.schema_version}};
    out << j.dump(2) << '\n';
}

inline CheckpointMeta read_meta(const std::filesystem::path& path) {
    std::ifstream in(meta_path(path));
    if (!in) throw checkpoint_error("missing checkpoint metadata " + meta_path(path).string());
    try {
        const auto j = nlohmann::json::parse(in);
        return {j.at("function").get<std::string>(), j.at("x_max").get<double>(), j.at("schema_version").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        throw checkpoint_error("bad checkpoint metadata " + meta_path(path).string() + ": " + e.what());
    }
}

/// Write the whole checkpoint (rows sorted by p) and its sidecar.
inline void write_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                             std::vector<PrimeAggregate> aggs) {
    std::sort(aggs.begin(), aggs.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw checkpoint_error("cannot write " + path.string());
    out << checkpoint_header << '\n';
    for (const auto& a : aggs) out << aggregate_row(a) << '\n';
    write_meta(path, meta);
}

/// Read all rows. Errors name the 1-based line number.
inline std::vector<PrimeAggregate> read_checkpoint_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw checkpoint_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != checkpoint_header)
        throw checkpoint_error(path.string() + ":1: unexpected header");
    std::vector<PrimeAggregate> rows;
    for (std::size_t n = 2; std::getline(in, line); ++n) {
        if (line.empty()) continue;
        try {
            rows.push_back(parse_aggregate_row(line));
        } catch (const std::exception& e) {
            throw checkpoint_error(path.string() + ":" + std::to_string(n) + ": corrupted row: " + e.what());
        }
    }
    return rows;
}

/// Read a checkpoint for resuming a run described by `expected`.
inline std::vector<PrimeAggregate> read_checkpoint(const std::filesystem::path& path, const CheckpointMeta& expected) {
    const auto meta = read_meta(path);
    if (meta.schema_version != expected.schema_version)
        throw checkpoint_error("checkpoint schema version " + std::to_string(meta.schema_version) + " != " +
                               std::to_string(expected.schema_version) + "; refusing to resume");
    if (meta.function != expected.function)
        throw checkpoint_error("checkpoint was written for function '" + meta.function + "', not '" +
                               expected.function + "'");
    return read_checkpoint_rows(path);
}

/**
 * Sweep the primes in [5, x] for `af`, reusing rows in `path` when present.
 * New rows are appended after each batch so an interrupted run loses at most one batch.
 */
inline std::vector<PrimeAggregate> resumable_sweep(const std::filesystem::path& path, const std::string& function,
                                                   double x, const ArithmeticFunction& af, unsigned threads,
                                                   std::size_t batch = 64) {
    const CheckpointMeta meta{function, x, checkpoint_schema_version};
    std::vector<PrimeAggregate> have;
    if (std::filesystem::exists(path)) {
        have = read_checkpoint(path, meta);
    } else {
        write_checkpoint(path, meta, {});
    }
    std::set<u64> done;
    for (const auto& a : have) done.insert(a.p);
    std::vector<u64> todo;
    for (u64 p : sweep_primes(x))
        if (!done.count(p)) todo.push_back(p);

    write_meta(path, {function, std::max(x, read_meta(path).x_max), checkpoint_schema_version});
    std::ofstream out(path, std::ios::app);
    if (!out) throw checkpoint_error("cannot append to " + path.string());
    for (std::size_t lo = 0; lo < todo.size(); lo += batch) {
        const std::vector<u64> part(todo.begin() + static_cast<std::ptrdiff_t>(lo),
                                    todo.begin() + static_cast<std::ptrdiff_t>(std::min(todo.size(), lo + batch)));
        auto fresh = sweep_aggregates(part, af, threads);
        for (const auto& a : fresh) out << aggregate_row(a) << '\n';
        out.flush();
        have.insert(have.end(), fresh.begin(), fresh.end());
    }
    return merge_aggregates({std::move(have)});
}

}  // namespace ecavg
