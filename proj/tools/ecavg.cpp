// ecavg: command-line front end for the curve-family experiments.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecavg/ecavg.hpp"

namespace {

using namespace ecavg;
using Json = nlohmann::ordered_json;

constexpr const char* threads_env = "ECAVG_THREADS";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string function = "cyclicity";
    std::string constant = "c0";
    double x = 1000.0;
    std::vector<double> x_grid;
    u64 A = 1'000'000;
    u64 B = 1'000'000;
    u64 samples = 10'000;
    u64 curves = 200;
    u64 seed = 0;
    unsigned threads = 1;
    u64 D = 100'000;
    u64 P = 100'000;
    u64 p = 5;
    i64 a = 1;
    i64 b = 1;
    u64 d = 0;
    unsigned k = 1;
    std::string variant = "all";
    std::string format = "json";
    std::string checkpoint;
    std::string output;
    std::string config;
};

/// A report body: named columns and rows. A `single` report puts row 0 at the top level of the JSON.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Json>> rows;
    bool single = false;
};

std::string csv_cell(const Json& v) {
    if (v.is_number_float()) return format_real(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

// ---------------------------------------------------------------------------
// Option wiring
// ---------------------------------------------------------------------------

void add_function(CLI::App* s, RunConfig& c) {
    s->add_option("--function", c.function, "Arithmetic function spec name[:params]. Builtins: " + std::string(builtin_names));
}
void add_grid(CLI::App* s, RunConfig& c) {
    s->add_option("--x", c.x, "Upper bound x")->check(CLI::NonNegativeNumber);
    s->add_option("--x-grid", c.x_grid, "Ascending comma-separated grid of x values; overrides --x")->delimiter(',');
}
void add_box(CLI::App* s, RunConfig& c) {
    s->add_option("--A", c.A, "Box half-width for a");
    s->add_option("--B", c.B, "Box half-width for b");
    s->add_option("--seed", c.seed, "Base RNG seed");
}
void add_common(CLI::App* s, RunConfig& c) {
    s->add_option("--threads", c.threads, std::string("Worker threads (env ") + threads_env + ", default: all cores)")
        ->check(CLI::PositiveNumber);
    s->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    s->add_option("--output", c.output, "Write the report to this file instead of stdout");
    s->add_option("--config", c.config, "Plain key=value file; command-line flags take precedence");
}

std::vector<double> resolved_grid(const RunConfig& c) {
    std::vector<double> grid = c.x_grid.empty() ? std::vector<double>{c.x} : c.x_grid;
    if (!std::is_sorted(grid.begin(), grid.end())) throw UsageError("--x-grid must be ascending");
    for (double x : grid)
        if (!(x >= 0.0) || x > static_cast<double>(sweep_max_prime)) throw UsageError("x out of range");
    return grid;
}

/// Apply key=value lines from the config file to options not given on the command line.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto lo = s.find_first_not_of(" \t\r");
            const auto hi = s.find_last_not_of(" \t\r");
            return lo == std::string::npos ? std::string() : s.substr(lo, hi - lo + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "config") throw UsageError(path + ":" + std::to_string(n) + ": nested config is not supported");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw UsageError(path + ":" + std::to_string(n) + ": unknown key '" + key + "' for " + sub->get_name());
        if (opt->count() > 0) continue;
        if (opt->get_items_expected_max() > 1) {
            std::stringstream ss(value);
            for (std::string item; std::getline(ss, item, ',');) opt->add_result(trim(item));
        } else {
            opt->add_result(value);
        }
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError(path + ":" + std::to_string(n) + ": " + e.what());
        }
    }
}

/// Resolved option values for the report, threads and file plumbing omitted.
Json resolved_config(CLI::App* sub) {
    Json cfg = Json::object();
    cfg["subcommand"] = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "threads" || name == "config" || name == "output" || name == "format") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
        } else {
            value = opt->get_default_str();
            if (value == "{}") value.clear();
            if (!value.empty() && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
        }
        cfg[name] = value;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

Json constant_row(const ConstantValue& v) {
    return Json{{"name", v.name},
                {"value", v.value},
                {"tail_bound", v.tail_bound},
                {"truncation", v.truncation},
                {"method", std::string(to_string(v.method))}};
}

Table run_constants(const RunConfig& c) {
    std::vector<ConstantValue> values;
    if (c.constant == "c0") {
        const auto af = builtin(c.function, c.D);
        values.push_back(c0_series(af, c.D));
        if (af.multiplicative()) values.push_back(c0_euler(af, c.P));
    } else if (c.constant == "moment") {
        values.push_back(moment_constant(c.k, c.D));
    } else {
        values.push_back(koblitz_constant(c.P));
    }
    Table t{{"name", "value", "tail_bound", "truncation", "method"}, {}, false};
    for (const auto& v : values) {
        const Json row = constant_row(v);
        std::vector<Json> cells;
        for (const auto& col : t.columns) cells.push_back(row[col]);
        t.rows.push_back(std::move(cells));
    }
    t.single = true;
    return t;
}

Table run_structure(const RunConfig& c) {
    const PrimeField F(c.p);
    const Curve curve = make_curve(F, F.from_signed(c.a), F.from_signed(c.b));
    const auto gs = group_structure(curve);
    return {{"p", "a", "b", "N", "i", "e", "trace"},
            {{c.p, curve.a(), curve.b(), gs.order, gs.index, gs.exponent, gs.trace}},
            true};
}

Table run_howe(const RunConfig& c) {
    if (c.p < 5 || !is_prime(c.p)) throw domain_error("howe: p must be a prime >= 5");
    if (c.p > sweep_max_prime) throw domain_error("howe: p exceeds the sweep bound");
    const auto domain = c.variant == "units" ? CensusDomain::units : CensusDomain::all;
    const auto classes = classify_prime(c.p);
    std::vector<u64> ds;
    if (c.d > 0) {
        ds.push_back(c.d);
    } else {
        for (u64 d : divisors(c.p - 1))
            if (census_admissible(c.p, d)) ds.push_back(d);
    }
    Table t{{"p", "d", "count", "main_term", "normalized_dev"}, {}, false};
    const double scale = std::pow(static_cast<double>(c.p), 1.5);
    for (u64 d : ds) {
        const u64 n = census_admissible(c.p, d) ? howe_count(classes, d, domain) : 0;
        const double mt = howe_main_term(c.p, d);
        t.rows.push_back({c.p, d, n, mt, std::abs(static_cast<double>(n) - mt) / scale});
    }
    return t;
}

Table run_main_term(const RunConfig& c) {
    const auto grid = resolved_grid(c);
    const auto af = builtin(c.function, c.D);
    const double c0 = c0_series(af, c.D).value;
    std::vector<PrimeAggregate> aggs;
    if (!c.checkpoint.empty()) {
        aggs = resumable_sweep(c.checkpoint, c.function, grid.back(), af, c.threads);
    } else {
        aggs = sweep_aggregates(sweep_primes(grid.back()), af, c.threads);
    }
    Table t{{"x", "main_term", "c0_li", "rel_err"}, {}, false};
    for (const auto& r : main_term_rows(aggs, grid, c0)) t.rows.push_back({r.x, r.main_term, r.c0_li, r.rel_err});
    return t;
}

Table run_moments(const RunConfig& c) {
    const auto grid = resolved_grid(c);
    const double Ck = c.k == 0 ? 1.0 : moment_constant(c.k, c.D).value;  // e^0 = 1 pairs with g = [n = 1]
    Table t{{"x", "moment_sum", "ck_li", "rel_err"}, {}, false};
    for (double x : grid) {
        const double m = moment_sum(x, c.k, c.threads);
        const double ref = x >= 2.0 ? Ck * log_integral(std::pow(x, c.k + 1.0)) : 0.0;
        t.rows.push_back({x, m, ref, ref != 0.0 ? std::abs(m - ref) / ref : 0.0});
    }
    return t;
}

void warn_thin_box(const RunConfig& c, double x) {
    if (x < 3.0) return;
    const double need = x * std::pow(std::log(x), 4.0);
    if (static_cast<double>(c.A) * static_cast<double>(c.B) <= need)
        std::cerr << "warning: AB = " << static_cast<double>(c.A) * static_cast<double>(c.B)
                  << " is below x (log x)^4 = " << need << "; the box is outside the asymptotic regime\n";
}

Table run_sample_box(const RunConfig& c) {
    const auto af = builtin(c.function, c.D);
    warn_thin_box(c, c.x);
    const auto r = sample_box_average({c.A, c.B}, c.x, c.samples, c.seed, af, c.threads);
    return {{"estimate", "std_error", "n_samples", "seed"}, {{r.estimate, r.std_error, r.n_samples, r.seed}}, true};
}

Table run_variance(const RunConfig& c) {
    const auto grid = resolved_grid(c);
    const auto af = builtin(c.function, c.D);
    const double c0 = c0_series(af, c.D).value;
    Table t{{"x", "sample_variance", "normalized_ratio"}, {}, false};
    for (double x : grid) {
        warn_thin_box(c, x);
        const auto r = variance_experiment({c.A, c.B}, x, c.curves, af, c0, c.seed, c.threads);
        t.rows.push_back({r.x, r.sample_variance, r.normalized_ratio});
    }
    return t;
}

Table run_koblitz_census(const RunConfig& c) {
    const auto grid = resolved_grid(c);
    const double K = koblitz_constant(c.P).value;
    Table t{{"x", "census", "koblitz_shape", "ratio"}, {}, false};
    for (double x : grid) {
        const double n = prime_order_census(x, c.threads);
        const double ref = x > 1.0 ? K * x / (std::log(x) * std::log(x)) : 0.0;
        t.rows.push_back({x, n, ref, ref != 0.0 ? n / ref : 0.0});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::string render(const Table& t, const Json& config, const std::string& format) {
    std::ostringstream out;
    if (format == "csv") {
        out << "# version=" << version << '\n';
        for (const auto& [k, v] : config.items()) out << "# " << k << '=' << v.get<std::string>() << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
            out << '\n';
        }
        return out.str();
    }
    Json report = Json::object();
    report["version"] = version;
    report["config"] = config;
    auto as_object = [&](const std::vector<Json>& row) {
        Json o = Json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = row[i];
        return o;
    };
    if (t.single) {
        const Json first = as_object(t.rows.front());
        for (const auto& [k, v] : first.items()) report[k] = v;
        if (t.rows.size() > 1) {
            report["cross_checks"] = Json::array();
            for (std::size_t i = 1; i < t.rows.size(); ++i) report["cross_checks"].push_back(as_object(t.rows[i]));
        }
    } else {
        report["rows"] = Json::array();
        for (const auto& row : t.rows) report["rows"].push_back(as_object(row));
    }
    out << report.dump(2) << '\n';
    return out.str();
}

unsigned env_threads() {
    if (const char* s = std::getenv(threads_env)) {
        try {
            const long v = std::stol(s);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw UsageError(std::string(threads_env) + " must be a positive integer");
    }
    return default_threads();
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Elliptic-curve family statistics: group invariants, torsion census, constants and box averages."};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    std::map<std::string, std::function<Table(const RunConfig&)>> handlers;
    auto sub = [&](const std::string& name, const std::string& help, std::function<Table(const RunConfig&)> fn) {
        CLI::App* s = app.add_subcommand(name, help);
        handlers[name] = std::move(fn);
        return s;
    };

    auto* constants = sub("constants", "Limiting constants with rigorous truncation bounds", run_constants);
    add_function(constants, cfg);
    constants->add_option("--constant", cfg.constant, "Which constant")->check(CLI::IsMember({"c0", "moment", "koblitz"}));
    constants->add_option("--k", cfg.k, "Moment order for --constant moment")->check(CLI::Range(1u, 5u));
    constants->add_option("--D", cfg.D, "Series truncation")->check(CLI::Range(u64{1}, u64{10'000'000}));
    constants->add_option("--P", cfg.P, "Euler product prime cutoff")->check(CLI::Range(u64{2}, u64{100'000'000}));

    auto* structure = sub("structure", "Group structure Z/i x Z/e of y^2 = x^3 + ax + b over F_p", run_structure);
    structure->add_option("--p", cfg.p, "Prime 5 <= p < 2^31");
    structure->add_option("--a", cfg.a, "Coefficient a (reduced mod p)");
    structure->add_option("--b", cfg.b, "Coefficient b (reduced mod p)");

    auto* howe = sub("howe", "Full d-torsion census S_d(p) against p(p-1)/(d psi(d) phi(d))", run_howe);
    howe->add_option("--p", cfg.p, "Prime p >= 5");
    howe->add_option("--d", cfg.d, "Torsion level; 0 lists every admissible d");
    howe->add_option("--variant", cfg.variant, "Pair domain")->check(CLI::IsMember({"all", "units"}));

    auto* main_term = sub("main-term", "Main-term sum M(x) against c0(f) li(x)", run_main_term);
    add_function(main_term, cfg);
    add_grid(main_term, cfg);
    main_term->add_option("--D", cfg.D, "Series truncation for c0")->check(CLI::Range(u64{1}, u64{10'000'000}));
    main_term->add_option("--checkpoint", cfg.checkpoint, "Checkpoint CSV; resumes when present");

    auto* moments = sub("moments", "Moment sums of e^k against C_k li(x^(k+1))", run_moments);
    add_grid(moments, cfg);
    moments->add_option("--k", cfg.k, "Moment order")->check(CLI::Range(0u, 4u));
    moments->add_option("--D", cfg.D, "Series truncation for C_k")->check(CLI::Range(u64{1}, u64{10'000'000}));

    auto* sample = sub("sample-box", "Monte-Carlo average of sum_p f(i_E(p)) over a box of curves", run_sample_box);
    add_function(sample, cfg);
    add_box(sample, cfg);
    sample->add_option("--x", cfg.x, "Upper bound x")->check(CLI::Range(0.0, static_cast<double>(sweep_max_prime)));
    sample->add_option("--samples", cfg.samples, "Number of sampled curves");

    auto* variance = sub("variance", "Mean square deviation from c0(f) li(x) over sampled curves", run_variance);
    add_function(variance, cfg);
    add_box(variance, cfg);
    add_grid(variance, cfg);
    variance->add_option("--curves", cfg.curves, "Curves per x");
    variance->add_option("--D", cfg.D, "Series truncation for c0")->check(CLI::Range(u64{1}, u64{10'000'000}));

    auto* koblitz = sub("koblitz-census", "Count of prime group orders against the Koblitz shape", run_koblitz_census);
    add_grid(koblitz, cfg);
    koblitz->add_option("--P", cfg.P, "Euler product prime cutoff")->check(CLI::Range(u64{2}, u64{100'000'000}));

    for (CLI::App* s : app.get_subcommands({})) add_common(s, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        if (!cfg.config.empty()) apply_config_file(chosen, cfg.config);
        if (chosen->get_option("--threads")->count() == 0) cfg.threads = env_threads();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        const Table table = handlers.at(chosen->get_name())(cfg);
        const std::string text = render(table, resolved_config(chosen), cfg.format);
        if (cfg.output.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(cfg.output);
            if (!out) throw std::runtime_error("cannot write " + cfg.output);
            out << text;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
