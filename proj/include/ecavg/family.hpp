#pragma once

/**
 * @file family.hpp
 * @brief Sweeps over the family E_{s,t}: y^2 = x^3 + sx + t, one prime at a time.
 *
 * Curves over F_p are grouped into isomorphism classes (s u^4, t u^6).
 * Every statistic here depends only on the class, so a prime costs one
 * group-structure computation per class, weighted by the orbit size
 * (p - 1) / |Aut|.
 *
 * Per-prime results are independent. Multi-threaded sweeps write them into
 * slots indexed by prime and fold in ascending p, so totals are bitwise
 * identical for any thread count or shard layout.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ecavg/arith.hpp"
#include "ecavg/constants.hpp"
#include "ecavg/ec.hpp"
#include "ecavg/numtheory.hpp"

namespace ecavg {

// =============================================================================
// Parallel map over an index range
// =============================================================================

/// Run fn(i) for i in [0, n) on `threads` workers. Each i runs exactly once.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        if (!failed.exchange(true)) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Primes 5 <= p <= x.
inline std::vector<u64> sweep_primes(double x) {
    if (x < 5.0) return {};
    auto primes = sieve_primes(static_cast<u64>(std::floor(x)));
    primes.erase(primes.begin(), std::find_if(primes.begin(), primes.end(), [](u64 p) { return p >= 5; }));
    return primes;
}

// =============================================================================
// Isomorphism classes
// =============================================================================

struct OrbitRep {
    u64 s;
    u64 t;
    u64 orbit_size;
    unsigned aut;

    bool units() const { return s != 0 && t != 0; }
    friend bool operator==(const OrbitRep&, const OrbitRep&) = default;
};

/// Largest prime handled by the per-prime sweeps.
inline constexpr u64 sweep_max_prime = PrimeTables::max_prime;

/**
 * One representative per isomorphism class of nonsingular (s, t) over F_p.
 * Order: the s = 0 classes, the t = 0 classes, then s t != 0 classes
 * (s over coset representatives of fourth powers; t modulo -1 when p = 1 mod 4).
 */
inline std::vector<OrbitRep> orbit_representatives(u64 p) {
    const PrimeField F(p);
    if (p > sweep_max_prime) throw domain_error("orbit_representatives: p exceeds the sweep bound");
    const u64 g = F.primitive_root();
    const u64 c6 = std::gcd<u64>(6, p - 1);
    const u64 c4 = std::gcd<u64>(4, p - 1);
    std::vector<OrbitRep> reps;
    reps.reserve(2 * p + 8);
    u64 v = 1;
    for (u64 i = 0; i < c6; ++i, v = F.mul(v, g)) reps.push_back({0, v, (p - 1) / c6, static_cast<unsigned>(c6)});
    v = 1;
    for (u64 i = 0; i < c4; ++i, v = F.mul(v, g)) reps.push_back({v, 0, (p - 1) / c4, static_cast<unsigned>(c4)});
    const u64 t_max = (p % 4 == 1) ? (p - 1) / 2 : p - 1;
    v = 1;
    for (u64 i = 0; i < c4; ++i, v = F.mul(v, g)) {
        for (u64 t = 1; t <= t_max; ++t) {
            if (is_nonsingular(F, v, t)) reps.push_back({v, t, (p - 1) / 2, 2});
        }
    }
    return reps;
}

struct ClassInfo {
    OrbitRep rep;
    GroupStructure structure;
};

/// Every class over F_p with its certified group structure.
inline std::vector<ClassInfo> classify_prime(u64 p) {
    const PrimeField F(p);
    const PrimeTables tables(F);
    std::vector<ClassInfo> out;
    for (const auto& rep : orbit_representatives(p)) {
        const Curve c = make_curve(F, rep.s, rep.t);
        out.push_back({rep, group_structure(c, tables)});
    }
    return out;
}

// =============================================================================
// Howe census
// =============================================================================

enum class CensusDomain { all, units };

/// d | p-1 and d <= sqrt(p) + 1: the only d with possibly nonzero census.
inline bool census_admissible(u64 p, u64 d) {
    return d >= 1 && (p - 1) % d == 0 && static_cast<double>(d) <= std::sqrt(static_cast<double>(p)) + 1.0;
}

/// Census counts from precomputed classes.
inline u64 howe_count(const std::vector<ClassInfo>& classes, u64 d, CensusDomain domain) {
    u64 n = 0;
    for (const auto& ci : classes) {
        if (domain == CensusDomain::units && !ci.rep.units()) continue;
        if (ci.structure.index % d == 0) n += ci.rep.orbit_size;
    }
    return n;
}

/// #{nonsingular (s, t) in the domain : E_{s,t}[d](F_p) = (Z/d)^2}.
inline u64 howe_count(u64 p, u64 d, CensusDomain domain) {
    if (d == 0) throw domain_error("howe_count: d must be >= 1");
    PrimeField{p};
    if (!census_admissible(p, d)) return 0;
    return howe_count(classify_prime(p), d, domain);
}

/// p(p-1) / (d psi(d) phi(d)).
inline double howe_main_term(u64 p, u64 d) {
    const auto f = factorize(d);
    return static_cast<double>(p) * static_cast<double>(p - 1) /
           (static_cast<double>(d) * static_cast<double>(dedekind_psi(f)) * static_cast<double>(euler_phi(f)));
}

// =============================================================================
// Per-prime aggregates
// =============================================================================

struct PrimeAggregate {
    u64 p = 0;
    double main_term_contrib = 0.0;
    double howe_max_dev = 0.0;
    std::map<u64, u64> census;  // d -> S~_d(p), admissible d only

    friend bool operator==(const PrimeAggregate&, const PrimeAggregate&) = default;
};

/// (1/(p(p-1))) sum over unit pairs of f(i), summed classwise in class order.
inline double main_term_contribution(u64 p, const std::vector<ClassInfo>& classes,
                                     const std::function<double(const ClassInfo&)>& value) {
    KahanSum sum;
    for (const auto& ci : classes)
        if (ci.rep.units()) sum.add(static_cast<double>(ci.rep.orbit_size) * value(ci));
    return sum.value() / (static_cast<double>(p) * static_cast<double>(p - 1));
}

inline PrimeAggregate aggregate_prime(u64 p, const std::vector<ClassInfo>& classes, const ArithmeticFunction& af) {
    PrimeAggregate agg;
    agg.p = p;
    agg.main_term_contrib =
        main_term_contribution(p, classes, [&](const ClassInfo& ci) { return af.f(ci.structure.index); });
    const double scale = std::pow(static_cast<double>(p), 1.5);
    for (u64 d : divisors(p - 1)) {
        if (!census_admissible(p, d)) continue;
        agg.census[d] = howe_count(classes, d, CensusDomain::units);
        const double dev = std::abs(static_cast<double>(howe_count(classes, d, CensusDomain::all)) - howe_main_term(p, d)) / scale;
        agg.howe_max_dev = std::max(agg.howe_max_dev, dev);
    }
    return agg;
}

inline PrimeAggregate aggregate_prime(u64 p, const ArithmeticFunction& af) {
    return aggregate_prime(p, classify_prime(p), af);
}

/// Per-prime map over the given primes, results in input order.
template <class T, class Fn>
std::vector<T> sweep(const std::vector<u64>& primes, unsigned threads, Fn&& per_prime) {
    std::vector<T> out(primes.size());
    parallel_for(primes.size(), threads, [&](std::size_t i) { out[i] = per_prime(primes[i]); });
    return out;
}

/// Aggregates for the given primes.
inline std::vector<PrimeAggregate> sweep_aggregates(const std::vector<u64>& primes, const ArithmeticFunction& af,
                                                    unsigned threads) {
    return sweep<PrimeAggregate>(primes, threads, [&](u64 p) { return aggregate_prime(p, af); });
}

/// Concatenate shards, order by p, drop duplicates.
inline std::vector<PrimeAggregate> merge_aggregates(std::vector<std::vector<PrimeAggregate>> shards) {
    std::vector<PrimeAggregate> all;
    for (auto& s : shards) all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    all.erase(std::unique(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.p == b.p; }), all.end());
    return all;
}

/// Fold of main_term_contrib in ascending p over aggregates with p <= x.
inline double total_main_term(const std::vector<PrimeAggregate>& aggs, double x) {
    KahanSum sum;
    for (const auto& a : aggs)
        if (static_cast<double>(a.p) <= x) sum.add(a.main_term_contrib);
    return sum.value();
}

struct MainTermResult {
    double value = 0.0;
    std::vector<PrimeAggregate> aggregates;
};

/**
 * M(x) = sum_{5 <= p <= x} (1/(p(p-1))) sum_{s,t in F_p^x, nonsingular} f(i_{E_{s,t}}(p)).
 * Without the 4AB/|C| prefactor. Classes with st = 0 do not enter.
 */
inline MainTermResult main_term_sum(double x, const ArithmeticFunction& af, unsigned threads = 1) {
    MainTermResult r;
    r.aggregates = sweep_aggregates(sweep_primes(x), af, threads);
    r.value = total_main_term(r.aggregates, x);
    return r;
}

/// sum_{s,t in F_p^x} f(i) and sum_d g(d) S~_d(p), both in exact arithmetic.
inline std::pair<Rational, Rational> census_pairing(u64 p, const ArithmeticFunction& af) {
    const auto classes = classify_prime(p);
    Rational direct = 0;
    for (const auto& ci : classes)
        if (ci.rep.units()) direct += Rational(ci.rep.orbit_size) * af.f_exact(ci.structure.index);
    Rational paired = 0;
    for (u64 d : divisors(p - 1)) {
        if (!census_admissible(p, d)) continue;
        paired += af.g_exact(d) * Rational(howe_count(classes, d, CensusDomain::units));
    }
    return {direct, paired};
}

// =============================================================================
// Comparisons against the limiting constants
// =============================================================================

struct MainTermRow {
    double x;
    double main_term;
    double c0_li;
    double rel_err;  // |M - c0 li| / (c0 li)
};

/// Rows for each x in the grid from aggregates covering [5, max(grid)].
inline std::vector<MainTermRow> main_term_rows(const std::vector<PrimeAggregate>& aggs, const std::vector<double>& grid,
                                               double c0) {
    std::vector<MainTermRow> rows;
    for (double x : grid) {
        const double m = total_main_term(aggs, x);
        const double ref = x >= 2.0 ? c0 * log_integral(x) : 0.0;
        rows.push_back({x, m, ref, ref != 0.0 ? std::abs(m - ref) / std::abs(ref) : 0.0});
    }
    return rows;
}

/// Rows for an ascending grid from one sweep to max(grid).
inline std::vector<MainTermRow> compare_main_term(const std::vector<double>& grid, const ArithmeticFunction& af,
                                                  double c0, unsigned threads = 1) {
    if (grid.empty()) return {};
    if (!std::is_sorted(grid.begin(), grid.end())) throw domain_error("compare_main_term: grid must be ascending");
    return main_term_rows(sweep_aggregates(sweep_primes(grid.back()), af, threads), grid, c0);
}

inline std::vector<MainTermRow> compare_main_term(const std::vector<double>& grid, const ArithmeticFunction& af,
                                                  unsigned threads = 1) {
    return compare_main_term(grid, af, c0_series(af, std::min<u64>(af.bound(), 100'000)).value, threads);
}

/// sum_{5 <= p <= x} (1/(p(p-1))) sum_{unit pairs} e^k. Requires k <= 4.
inline double moment_sum(double x, unsigned k, unsigned threads = 1) {
    if (k > 4) throw domain_error("moment_sum: k must be <= 4");
    const auto primes = sweep_primes(x);
    const auto parts = sweep<double>(primes, threads, [k](u64 p) {
        return main_term_contribution(p, classify_prime(p), [k](const ClassInfo& ci) {
            return std::pow(static_cast<double>(ci.structure.exponent), static_cast<double>(k));
        });
    });
    KahanSum sum;
    for (double v : parts) sum.add(v);
    return sum.value();
}

/// sum_{5 <= p <= x} (1/(p(p-1))) #{unit pairs with #E(F_p) prime}.
inline double prime_order_census(double x, unsigned threads = 1) {
    const auto primes = sweep_primes(x);
    const auto parts = sweep<double>(primes, threads, [](u64 p) {
        return main_term_contribution(p, classify_prime(p),
                                      [](const ClassInfo& ci) { return is_prime(ci.structure.order) ? 1.0 : 0.0; });
    });
    KahanSum sum;
    for (double v : parts) sum.add(v);
    return sum.value();
}

/**
 * sum_{5 <= p <= x} (1/p^2) sum_{all nonsingular (s, t) in F_p^2} f(i): what a box
 * average converges to when curves with s t = 0 mod p are kept.
 */
inline double family_expectation(double x, const ArithmeticFunction& af, unsigned threads = 1) {
    const auto primes = sweep_primes(x);
    const auto parts = sweep<double>(primes, threads, [&](u64 p) {
        KahanSum acc;
        for (const auto& ci : classify_prime(p))
            acc.add(static_cast<double>(ci.rep.orbit_size) * af.f(ci.structure.index));
        return acc.value() / (static_cast<double>(p) * static_cast<double>(p));
    });
    KahanSum sum;
    for (double v : parts) sum.add(v);
    return sum.value();
}

// =============================================================================
// Box sampling
// =============================================================================

struct BoxSpec {
    u64 A = 1;
    u64 B = 1;
};

struct SampleReport {
    double estimate = 0.0;
    double std_error = 0.0;
    u64 n_samples = 0;
    u64 seed = 0;
};

/// Shared per-prime tables for the sampled family, built once.
class PrimeTableCache {
  public:
    explicit PrimeTableCache(double x) {
        for (u64 p : sweep_primes(x)) tables_.emplace_back(PrimeField(p));
    }
    const std::vector<PrimeTables>& tables() const { return tables_; }

  private:
    std::vector<PrimeTables> tables_;
};

/// A uniform (a, b) in the box with (a, b) != (0, 0).
inline std::pair<i64, i64> draw_box_curve(const BoxSpec& box, RngStream& rng) {
    for (;;) {
        const i64 a = rng.between(-static_cast<i64>(box.A), static_cast<i64>(box.A));
        const i64 b = rng.between(-static_cast<i64>(box.B), static_cast<i64>(box.B));
        if (a != 0 || b != 0) return {a, b};
    }
}

/// sum over good primes 5 <= p <= x of f(i_E(p)) for E = E_{a,b}; p | 4a^3 + 27b^2 is skipped.
inline double curve_prime_sum(i64 a, i64 b, const PrimeTableCache& cache, const ArithmeticFunction& af) {
    KahanSum sum;
    for (const auto& tab : cache.tables()) {
        const PrimeField& F = tab.field();
        const u64 s = F.from_signed(a), t = F.from_signed(b);
        if ((s == 0 && t == 0) || !is_nonsingular(F, s, t)) continue;
        const Curve c = make_curve(F, s, t);
        sum.add(af.f(group_structure(c, tab).index));
    }
    return sum.value();
}

inline void validate_box(const BoxSpec& box) {
    if (box.A == 0 && box.B == 0) throw domain_error("box: A = B = 0 contains only the excluded pair (0, 0)");
    if (box.A > (u64{1} << 40) || box.B > (u64{1} << 40)) throw domain_error("box: sides must be <= 2^40");
}

/**
 * Monte-Carlo estimate of (1/|C|) sum_{E in C} sum_{p <= x} f(i_E(p)).
 * Sample j draws its curve from the stream keyed by (seed, j).
 */
inline SampleReport sample_box_average(const BoxSpec& box, double x, u64 n, u64 seed, const ArithmeticFunction& af,
                                       unsigned threads = 1) {
    if (n == 0) throw domain_error("sample_box_average: n must be >= 1");
    validate_box(box);
    const PrimeTableCache cache(x);
    std::vector<double> values(n);
    parallel_for(n, threads, [&](std::size_t j) {
        RngStream rng(seed, j);
        const auto [a, b] = draw_box_curve(box, rng);
        values[j] = curve_prime_sum(a, b, cache, af);
    });
    KahanSum mean_sum;
    for (double v : values) mean_sum.add(v);
    const double mean = mean_sum.value() / static_cast<double>(n);
    KahanSum sq;
    for (double v : values) sq.add((v - mean) * (v - mean));
    const double var = n > 1 ? sq.value() / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n, seed};
}

struct VarianceReport {
    double x = 0.0;
    double sample_variance = 0.0;
    double normalized_ratio = 0.0;
};

/**
 * Draw m curves; T_E = sum_{good p <= x} f(i_E(p)). Returns the mean of
 * (T_E - c0 li(x))^2 and that mean times (log x)^2 / x^2.
 */
inline VarianceReport variance_experiment(const BoxSpec& box, double x, u64 m, const ArithmeticFunction& af, double c0,
                                          u64 seed, unsigned threads = 1) {
    if (m < 2) throw domain_error("variance_experiment: m must be >= 2");
    if (x < 2.0) throw domain_error("variance_experiment: x must be >= 2");
    validate_box(box);
    const PrimeTableCache cache(x);
    const double center = c0 * log_integral(x);
    std::vector<double> dev(m);
    parallel_for(m, threads, [&](std::size_t j) {
        RngStream rng(seed, j);
        const auto [a, b] = draw_box_curve(box, rng);
        const double d = curve_prime_sum(a, b, cache, af) - center;
        dev[j] = d * d;
    });
    KahanSum sum;
    for (double v : dev) sum.add(v);
    const double mean = sum.value() / static_cast<double>(m);
    const double lx = std::log(x);
    return {x, mean, mean * lx * lx / (x * x)};
}

}  // namespace ecavg
