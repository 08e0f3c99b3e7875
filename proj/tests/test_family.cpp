#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ecavg/family.hpp"
#include "oracles.hpp"

using namespace ecavg;

namespace {

std::vector<u64> primes_in(u64 lo, u64 hi) {
    std::vector<u64> out;
    for (u64 p : sieve_primes(hi))
        if (p >= lo) out.push_back(p);
    return out;
}

const std::vector<std::string> rational_builtins = {"cyclicity", "tau",         "power_neg:1",     "power_neg:2",
                                                    "power:0",   "sigma:0",     "omega_pow:2",     "bigomega_pow:1",
                                                    "two_pow_k_omega:1", "tau_k_pow:2,2"};

}  // namespace

TEST(OrbitRepresentatives, Examples) {
    const auto r5 = orbit_representatives(5);
    EXPECT_EQ(r5.size(), 12u);
    u64 total = 0;
    int s0 = 0, t0 = 0, units = 0;
    for (const auto& r : r5) {
        total += r.orbit_size;
        s0 += r.s == 0;
        t0 += r.t == 0;
        units += r.units();
        if (r.t == 0) { EXPECT_EQ(r.aut, 4u); }
    }
    EXPECT_EQ(total, 20u);
    EXPECT_EQ(s0, 2);
    EXPECT_EQ(t0, 4);
    EXPECT_EQ(units, 6);
    u64 total7 = 0;
    for (const auto& r : orbit_representatives(7)) total7 += r.orbit_size;
    EXPECT_EQ(total7, 42u);
    EXPECT_THROW(orbit_representatives(4), domain_error);
    EXPECT_THROW(orbit_representatives(3), domain_error);
}

TEST(OrbitRepresentatives, OrbitSizesAndAutomorphismGroups) {
    for (u64 p : primes_in(5, 1000)) {
        u64 total = 0;
        for (const auto& r : orbit_representatives(p)) {
            ASSERT_EQ(r.orbit_size * r.aut, p - 1);
            if (r.aut == 6) { ASSERT_TRUE(r.s == 0 && p % 6 == 1); }
            if (r.aut == 4) { ASSERT_TRUE(r.t == 0 && p % 4 == 1); }
            if (r.aut != 6 && r.aut != 4) { ASSERT_EQ(r.aut, 2u); }
            ASSERT_TRUE(oracle::nonsingular(r.s, r.t, p));
            total += r.orbit_size;
        }
        ASSERT_EQ(total, p * p - p) << p;
    }
}

TEST(OrbitRepresentatives, MatchCanonicalOrbitDeduplication) {
    for (u64 p : primes_in(5, 97)) {
        std::map<std::pair<u64, u64>, u64> orbit;
        for (u64 s = 0; s < p; ++s)
            for (u64 t = 0; t < p; ++t)
                if (oracle::nonsingular(s, t, p)) ++orbit[oracle::canonical(s, t, p)];
        const auto reps = orbit_representatives(p);
        ASSERT_EQ(reps.size(), orbit.size()) << p;
        std::set<std::pair<u64, u64>> seen;
        for (const auto& r : reps) {
            const auto key = oracle::canonical(r.s, r.t, p);
            ASSERT_TRUE(seen.insert(key).second) << "duplicate class at p=" << p;
            ASSERT_EQ(orbit.at(key), r.orbit_size) << p;
        }
    }
}

TEST(HoweCount, Examples) {
    EXPECT_EQ(howe_count(5, 1, CensusDomain::all), 20u);
    EXPECT_EQ(howe_count(7, 2, CensusDomain::all), 5u);
    EXPECT_LE(std::abs(5.0 - howe_main_term(7, 2)), std::pow(7.0, 1.5));
    EXPECT_DOUBLE_EQ(howe_main_term(7, 2), 7.0);
    EXPECT_EQ(howe_count(5, 2, CensusDomain::units), 0u);
    EXPECT_THROW(howe_count(5, 0, CensusDomain::all), domain_error);
    EXPECT_EQ(howe_count(13, 5, CensusDomain::all), 0u);
}

TEST(HoweCount, MatchesBruteForceCensus) {
    for (u64 p : primes_in(5, 61)) {
        for (u64 d : divisors(p - 1)) {
            if (!census_admissible(p, d)) continue;
            u64 all = 0, units = 0;
            for (u64 s = 0; s < p; ++s)
                for (u64 t = 0; t < p; ++t) {
                    if (!oracle::nonsingular(s, t, p)) continue;
                    const bool full = oracle::structure(static_cast<i64>(s), static_cast<i64>(t), static_cast<i64>(p)).i % d == 0;
                    all += full;
                    units += full && s != 0 && t != 0;
                }
            ASSERT_EQ(howe_count(p, d, CensusDomain::all), all) << p << " " << d;
            ASSERT_EQ(howe_count(p, d, CensusDomain::units), units) << p << " " << d;
        }
    }
}

TEST(HoweCount, ExactValuesAndDeviationUpTo499) {
    double max_dev = 0.0;
    for (u64 p : primes_in(5, 499)) {
        const auto classes = classify_prime(p);
        ASSERT_EQ(howe_count(classes, 1, CensusDomain::all), p * (p - 1)) << p;
        for (u64 d = 2; d <= 2 * p; ++d)
            if (!census_admissible(p, d)) {
                ASSERT_EQ(howe_count(classes, d, CensusDomain::all), 0u) << p << " " << d;
            }
        const auto agg = aggregate_prime(p, classes, builtin("cyclicity", 1000));
        for (const auto& [d, n] : agg.census) {
            ASSERT_EQ((p - 1) % d, 0u);
            ASSERT_LE(static_cast<double>(d), std::sqrt(static_cast<double>(p)) + 1.0);
        }
        max_dev = std::max(max_dev, agg.howe_max_dev);
    }
    RecordProperty("howe_max_dev", std::to_string(max_dev));
    EXPECT_LE(max_dev, 16.0);
    EXPECT_GT(max_dev, 0.0);
}

TEST(CensusPairing, TauAtFive) {
    const auto [direct, paired] = census_pairing(5, builtin("tau", 1000));
    EXPECT_EQ(direct, Rational(12));
    EXPECT_EQ(paired, Rational(12));
}

TEST(CensusPairing, ExactForEveryRationalBuiltinUpTo199) {
    for (const auto& spec : rational_builtins) {
        const auto af = builtin(spec, 1000);
        for (u64 p : primes_in(5, 199)) {
            const auto [direct, paired] = census_pairing(p, af);
            ASSERT_EQ(direct, paired) << spec << " p=" << p;
        }
    }
}

TEST(MainTerm, Examples) {
    const auto cyc = builtin("cyclicity", 1000);
    EXPECT_EQ(main_term_sum(5, cyc).value, 0.6);
    EXPECT_EQ(main_term_sum(4, cyc).value, 0.0);
    EXPECT_TRUE(main_term_sum(4, cyc).aggregates.empty());
    EXPECT_EQ(main_term_sum(6.5, cyc).value, 0.6);
}

TEST(MainTerm, ClasswiseEqualsDirectSweepUpTo97) {
    const std::vector<std::string> specs = {"cyclicity", "tau", "power_neg:1"};
    std::vector<ArithmeticFunction> afs;
    for (const auto& s : specs) afs.push_back(builtin(s, 1000));
    for (u64 p : primes_in(5, 97)) {
        std::vector<Rational> direct(afs.size(), Rational(0));
        for (u64 s = 1; s < p; ++s)
            for (u64 t = 1; t < p; ++t) {
                if (!oracle::nonsingular(s, t, p)) continue;
                const u64 i = oracle::structure(static_cast<i64>(s), static_cast<i64>(t), static_cast<i64>(p)).i;
                for (std::size_t k = 0; k < afs.size(); ++k) direct[k] += afs[k].f_exact(i);
            }
        const auto classes = classify_prime(p);
        for (std::size_t k = 0; k < afs.size(); ++k) {
            Rational classwise = 0;
            for (const auto& ci : classes)
                if (ci.rep.units()) classwise += Rational(ci.rep.orbit_size) * afs[k].f_exact(ci.structure.index);
            ASSERT_EQ(classwise, direct[k]) << specs[k] << " p=" << p;
            const double expected = static_cast<double>(direct[k] / Rational(p * (p - 1)));
            const double got = aggregate_prime(p, classes, afs[k]).main_term_contrib;
            if (specs[k] == "power_neg:1") {
                ASSERT_NEAR(got, expected, 1e-15 * expected) << p;
            } else {
                ASSERT_EQ(got, static_cast<double>(direct[k]) / static_cast<double>(p * (p - 1))) << specs[k] << p;
            }
        }
    }
}

TEST(MainTerm, ShardedSweepsMergeBitwise) {
    const auto af = builtin("cyclicity", 1000);
    const auto primes = sweep_primes(400);
    const auto single = main_term_sum(400, af, 1);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<std::vector<u64>> parts(1 + trial);
        for (u64 p : primes) parts[rng() % parts.size()].push_back(p);
        std::vector<std::vector<PrimeAggregate>> shards;
        for (std::size_t k = 0; k < parts.size(); ++k) shards.push_back(sweep_aggregates(parts[k], af, 1 + k % 3));
        std::shuffle(shards.begin(), shards.end(), rng);
        const auto merged = merge_aggregates(shards);
        ASSERT_EQ(merged, single.aggregates);
        ASSERT_EQ(total_main_term(merged, 400), single.value);
    }
    EXPECT_EQ(main_term_sum(400, af, 4).value, single.value);
}

TEST(CompareMainTerm, Rows) {
    const auto af = builtin("cyclicity", 100000);
    EXPECT_TRUE(compare_main_term({}, af).empty());
    const double c0 = c0_series(af, 100000).value;
    const auto rows = compare_main_term({5.0, 50.0}, af);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].x, 5.0);
    EXPECT_EQ(rows[0].main_term, 0.6);
    EXPECT_DOUBLE_EQ(rows[0].c0_li, c0 * log_integral(5.0));
    EXPECT_DOUBLE_EQ(rows[0].rel_err, std::abs(0.6 - rows[0].c0_li) / rows[0].c0_li);
    EXPECT_EQ(rows[1].main_term, main_term_sum(50, af).value);
    EXPECT_THROW(compare_main_term({50.0, 5.0}, af), domain_error);
}

TEST(MomentSum, Examples) {
    EXPECT_EQ(moment_sum(4, 1), 0.0);
    for (double x : {5.0, 30.0, 100.0}) EXPECT_EQ(moment_sum(x, 0), main_term_sum(x, builtin("power:0", 100)).value);
    double direct = 0;
    for (u64 s = 1; s < 5; ++s)
        for (u64 t = 1; t < 5; ++t)
            if (oracle::nonsingular(s, t, 5)) {
                const auto st = oracle::structure(static_cast<i64>(s), static_cast<i64>(t), 5);
                EXPECT_EQ(st.i, 1u);
                direct += static_cast<double>(st.N);
            }
    EXPECT_DOUBLE_EQ(moment_sum(5, 1), direct / 20.0);
    EXPECT_THROW(moment_sum(10, 5), domain_error);
}

TEST(PrimeOrderCensus, Examples) {
    EXPECT_EQ(prime_order_census(4), 0.0);
    double count = 0;
    for (u64 s = 1; s < 5; ++s)
        for (u64 t = 1; t < 5; ++t)
            if (oracle::nonsingular(s, t, 5)) count += oracle::is_prime(oracle::structure(i64(s), i64(t), 5).N);
    EXPECT_DOUBLE_EQ(prime_order_census(5), count / 20.0);
    double prev = 0;
    for (double x : {5.0, 7.0, 50.0, 100.0, 200.0}) {
        const double v = prime_order_census(x);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(SampleBox, DeterministicAndThreadIndependent) {
    const auto af = builtin("cyclicity", 1000);
    const BoxSpec box{1000, 1000};
    const auto a = sample_box_average(box, 100, 300, 11, af, 1);
    const auto b = sample_box_average(box, 100, 300, 11, af, 3);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.n_samples, 300u);
    EXPECT_EQ(a.seed, 11u);
    const auto c = sample_box_average(box, 100, 300, 12, af, 1);
    EXPECT_NE(a.estimate, c.estimate);
    EXPECT_GT(a.std_error, 0.0);
}

TEST(SampleBox, RejectsBadInput) {
    const auto af = builtin("cyclicity", 1000);
    EXPECT_THROW(sample_box_average({10, 10}, 100, 0, 1, af), domain_error);
    EXPECT_THROW(sample_box_average({0, 0}, 100, 10, 1, af), domain_error);
}

TEST(SampleBox, SkipsBadReductionPrimes) {
    // (a, b) = (0, 1) has 4a^3 + 27b^2 = 27: only 3 is bad, so every p >= 5 counts.
    const PrimeTableCache cache(50);
    EXPECT_EQ(curve_prime_sum(0, 1, cache, builtin("power:0", 10)), static_cast<double>(sweep_primes(50).size()));
    // (a, b) = (-5, 0): 4a^3 = -500 = -2^2 5^3, so p = 5 is skipped.
    EXPECT_EQ(curve_prime_sum(-5, 0, cache, builtin("power:0", 10)), static_cast<double>(sweep_primes(50).size() - 1));
}

TEST(SampleBox, ConsistentWithFullFamilyExpectationOnASmallBox) {
    // On the box |a|, |b| <= p0 * m the reductions mod each small prime are nearly uniform.
    const auto af = builtin("cyclicity", 1000);
    const auto r = sample_box_average({1'000'000, 1'000'000}, 60, 4000, 5, af);
    EXPECT_LE(std::abs(r.estimate - family_expectation(60, af)), 4 * r.std_error);
}

TEST(Variance, DeterministicAndValidated) {
    const auto af = builtin("cyclicity", 1000);
    const BoxSpec box{1000, 1000};
    const double c0 = c0_series(af, 1000).value;
    EXPECT_THROW(variance_experiment(box, 100, 1, af, c0, 1), domain_error);
    const auto a = variance_experiment(box, 100, 40, af, c0, 9, 1);
    const auto b = variance_experiment(box, 100, 40, af, c0, 9, 2);
    EXPECT_EQ(a.sample_variance, b.sample_variance);
    EXPECT_EQ(a.normalized_ratio, b.normalized_ratio);
    EXPECT_DOUBLE_EQ(a.normalized_ratio, a.sample_variance * std::log(100.0) * std::log(100.0) / 1e4);
}
