#include <gtest/gtest.h>

#include <set>

#include "ecavg/ec.hpp"
#include "oracles.hpp"

using namespace ecavg;

namespace {

Curve curve(u64 p, u64 a, u64 b) { return make_curve(PrimeField(p), a, b); }

std::vector<u64> primes_in(u64 lo, u64 hi) {
    std::vector<u64> out;
    for (u64 p : sieve_primes(hi))
        if (p >= lo) out.push_back(p);
    return out;
}

}  // namespace

TEST(RngStream, DeterministicAndKeyed) {
    RngStream a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 16; ++i) {
        const u64 x = a.next();
        EXPECT_EQ(x, b.next());
        differs_c |= x != c.next();
        differs_d |= x != d.next();
    }
    EXPECT_TRUE(differs_c);
    EXPECT_TRUE(differs_d);
}

TEST(RngStream, BoundedDrawsStayInRange) {
    RngStream r(9, 9);
    std::set<i64> seen;
    for (int i = 0; i < 5000; ++i) {
        const i64 v = r.between(-3, 3);
        ASSERT_GE(v, -3);
        ASSERT_LE(v, 3);
        seen.insert(v);
        ASSERT_LT(r.below(10), 10u);
    }
    EXPECT_EQ(seen.size(), 7u);
}

TEST(PrimeField, RejectsBadModuli) {
    EXPECT_THROW(PrimeField(2), domain_error);
    EXPECT_THROW(PrimeField(3), domain_error);
    EXPECT_THROW(PrimeField(9), domain_error);
    EXPECT_THROW(PrimeField(u64{1} << 61), domain_error);
    EXPECT_NO_THROW(PrimeField(2305843009213693951ULL));
}

TEST(PrimeField, SqrtLegendreAndPrimitiveRoot) {
    for (u64 p : primes_in(5, 400)) {
        const PrimeField F(p);
        for (u64 a = 0; a < p; ++a) {
            int expected = a == 0 ? 0 : -1;
            for (u64 y = 1; y < p; ++y)
                if (y * y % p == a) expected = 1;
            ASSERT_EQ(F.legendre(a), expected) << p << " " << a;
            if (expected >= 0) {
                ASSERT_EQ(F.mul(F.sqrt(a), F.sqrt(a)), a);
            }
        }
        const u64 g = F.primitive_root();
        std::set<u64> powers;
        for (u64 k = 0, v = 1; k < p - 1; ++k, v = F.mul(v, g)) powers.insert(v);
        ASSERT_EQ(powers.size(), p - 1) << p;
        ASSERT_EQ(F.legendre(F.non_residue()), -1);
    }
    const PrimeField big(2305843009213693951ULL);
    for (u64 a : {2ULL, 3ULL, 123456789ULL, 2305843009213693950ULL}) {
        if (big.legendre(a) == 1) {
            EXPECT_EQ(big.mul(big.sqrt(a), big.sqrt(a)), a);
        }
    }
}

TEST(MakeCurve, Examples) {
    const PrimeField F(5);
    EXPECT_NO_THROW(make_curve(F, 1, 1));
    try {
        make_curve(F, 0, 0);
        FAIL();
    } catch (const BadReduction& e) {
        EXPECT_EQ(e.kind(), BadReduction::Kind::excluded);
    }
    try {
        make_curve(F, 2, 2);
        FAIL();
    } catch (const BadReduction& e) {
        EXPECT_EQ(e.kind(), BadReduction::Kind::singular);
    }
    EXPECT_THROW(make_curve(F, 5, 1), domain_error);
}

TEST(PointArithmetic, Examples) {
    const Curve c = curve(5, 1, 1);
    const Point P = Point::affine(0, 1);
    EXPECT_EQ(point_add(c, P, Point::at_infinity()), P);
    EXPECT_TRUE(point_add(c, P, point_neg(c, P)).infinity);
    EXPECT_EQ(point_add(c, P, P), Point::affine(4, 2));
    EXPECT_EQ(scalar_mul(c, 1, P), P);
    EXPECT_TRUE(scalar_mul(c, 0, P).infinity);
    EXPECT_TRUE(scalar_mul(c, 9, P).infinity);
    EXPECT_EQ(scalar_mul(c, 2, P), point_add(c, P, P));
    EXPECT_THROW(point_add(c, Point::affine(0, 2), P), domain_error);
    EXPECT_THROW(scalar_mul(c, 3, Point::affine(1, 1)), domain_error);
}

TEST(PointArithmetic, AgreesWithOracleGroupLaw) {
    for (u64 p : {7ULL, 13ULL, 31ULL}) {
        for (u64 a = 0; a < p; a += 3) {
            for (u64 b = 1; b < p; b += 5) {
                if (!oracle::nonsingular(a, b, p)) continue;
                const Curve c = curve(p, a, b);
                const auto pts = oracle::points(static_cast<i64>(a), static_cast<i64>(b), static_cast<i64>(p));
                auto conv = [](const oracle::Pt& q) {
                    return q.inf ? Point::at_infinity() : Point::affine(static_cast<u64>(q.x), static_cast<u64>(q.y));
                };
                for (const auto& P : pts)
                    for (const auto& Q : pts)
                        ASSERT_EQ(point_add(c, conv(P), conv(Q)),
                                  conv(oracle::add(P, Q, static_cast<i64>(a), static_cast<i64>(p))));
            }
        }
    }
}

TEST(CountPoints, Examples) {
    EXPECT_EQ(count_points(curve(5, 1, 1)), 9u);
    EXPECT_EQ(count_points(curve(5, 4, 0)), 8u);
    EXPECT_EQ(count_points(curve(7, 0, 2)), 9u);
}

TEST(CountPoints, TablesAndLegendrePathsAgreeWithHasse) {
    for (u64 p : {101ULL, 1009ULL, 65537ULL}) {
        const PrimeField F(p);
        const PrimeTables T(F);
        RngStream r(p, 0);
        for (int k = 0; k < 20; ++k) {
            const u64 a = r.below(p), b = r.below(p);
            if (!is_nonsingular(F, a, b) || (a == 0 && b == 0)) continue;
            const Curve c = make_curve(F, a, b);
            const u64 N = count_points(c, T);
            ASSERT_EQ(N, count_points(c));
            ASSERT_LE(std::abs(static_cast<double>(N) - static_cast<double>(p + 1)), 2 * std::sqrt(double(p)));
        }
    }
}

TEST(CountPoints, RejectsPrimesAboveTheBound) {
    const Curve c = curve(2305843009213693951ULL, 1, 1);
    EXPECT_THROW(count_points(c), domain_error);
    EXPECT_THROW(group_structure(c), domain_error);
}

TEST(EnumeratePoints, Examples) {
    const auto pts = enumerate_points(curve(5, 1, 1));
    EXPECT_EQ(pts.size(), 9u);
    const Curve c = curve(5, 4, 0);
    int order_two = 0;
    for (const auto& P : enumerate_points(c)) {
        EXPECT_TRUE(on_curve(c, P));
        order_two += !P.infinity && point_order(c, P, factorize(8)) == 2;
    }
    EXPECT_EQ(order_two, 3);
    EXPECT_THROW(enumerate_points(curve(10007, 1, 1)), domain_error);
}

TEST(PointOrder, Examples) {
    const Curve c5 = curve(5, 1, 1);
    EXPECT_EQ(point_order(c5, Point::at_infinity(), factorize(9)), 1u);
    EXPECT_EQ(point_order(c5, Point::affine(0, 1), factorize(9)), 9u);
    EXPECT_EQ(point_order(curve(7, 0, 2), Point::affine(0, 3), factorize(9)), 3u);
    EXPECT_THROW(point_order(c5, Point::affine(0, 1), factorize(3)), domain_error);
}

TEST(GroupStructure, Examples) {
    EXPECT_EQ(group_structure(curve(5, 1, 1)), (GroupStructure{9, 1, 9, -3}));
    EXPECT_EQ(group_structure(curve(5, 4, 0)), (GroupStructure{8, 2, 4, -2}));
    EXPECT_EQ(group_structure(curve(7, 0, 2)), (GroupStructure{9, 3, 3, -1}));
}

TEST(GroupStructure, ExhaustiveAgainstEnumerationUpTo199) {
    for (u64 p : primes_in(5, 199)) {
        const PrimeField F(p);
        const PrimeTables T(F);
        for (u64 a = 0; a < p; ++a) {
            for (u64 b = 0; b < p; ++b) {
                if (!oracle::nonsingular(a, b, p)) continue;
                const Curve c = make_curve(F, a, b);
                const auto gs = group_structure(c, T);
                const auto ref = oracle::structure(static_cast<i64>(a), static_cast<i64>(b), static_cast<i64>(p));
                ASSERT_EQ(gs.order, ref.N) << p << " " << a << " " << b;
                ASSERT_EQ(gs.index, ref.i) << p << " " << a << " " << b;
                ASSERT_EQ(gs.exponent, ref.e) << p << " " << a << " " << b;
                ASSERT_EQ(gs.trace, static_cast<i64>(p + 1) - static_cast<i64>(ref.N));
            }
        }
    }
}

TEST(GroupStructure, RandomPathAgreesWithEnumerationAboveTheThreshold) {
    for (u64 p : {10007ULL, 10009ULL, 10037ULL}) {
        const PrimeField F(p);
        const PrimeTables T(F);
        RngStream r(p, 1);
        int non_cyclic = 0;
        for (u64 a = 0; a < p && non_cyclic < 6; a += 1 + r.below(50)) {
            for (u64 b : {u64{0}, u64{1}, r.below(p)}) {
                if (!oracle::nonsingular(a, b, p)) continue;
                const Curve c = make_curve(F, a, b);
                const auto ref = oracle::structure(static_cast<i64>(a), static_cast<i64>(b), static_cast<i64>(p));
                const auto gs = group_structure(c, T);
                ASSERT_EQ(gs.index, ref.i) << p << " " << a << " " << b;
                ASSERT_EQ(gs.exponent, ref.e);
                ASSERT_EQ(group_structure(c, RngStream(77, a * p + b)), gs);
                non_cyclic += ref.i > 1;
            }
        }
    }
}

TEST(GroupStructure, InvariantsAtLargePrimes) {
    for (u64 p : {1000003ULL, 10000019ULL}) {
        const PrimeField F(p);
        RngStream r(p, 5);
        for (int k = 0; k < (p < 10'000'000 ? 30 : 3); ++k) {
            const u64 a = r.below(p), b = r.below(p);
            const Curve c = make_curve(F, a, b);
            const auto gs = group_structure(c);
            EXPECT_EQ(gs.index * gs.exponent, gs.order);
            EXPECT_EQ(gs.exponent % gs.index, 0u);
            EXPECT_EQ((p - 1) % gs.index, 0u);
            EXPECT_LE(std::abs(static_cast<double>(gs.trace)), 2 * std::sqrt(double(p)));
            RngStream pts(p, 100 + k);
            for (int j = 0; j < 4; ++j) {
                u64 x = pts.below(p);
                while (F.legendre(c.rhs(x)) != 1) x = pts.below(p);
                const Point P = Point::affine(x, F.sqrt(c.rhs(x)));
                EXPECT_TRUE(scalar_mul(c, gs.exponent, P).infinity);
            }
        }
    }
}

TEST(GroupStructure, TwistOrdersSumToTwoPPlusTwo) {
    for (u64 p : primes_in(5, 199)) {
        const PrimeField F(p);
        const PrimeTables T(F);
        const u64 v = F.non_residue();
        for (u64 a = 0; a < p; ++a)
            for (u64 b = 0; b < p; ++b) {
                if (!oracle::nonsingular(a, b, p)) continue;
                const Curve c = make_curve(F, a, b);
                ASSERT_EQ(count_points(c, T) + count_points(quadratic_twist(c, v), T), 2 * p + 2);
            }
    }
}

TEST(GroupStructure, SupersingularFamiliesHaveOrderPPlusOne) {
    for (u64 p : primes_in(5, 499)) {
        const PrimeField F(p);
        const PrimeTables T(F);
        for (u64 v = 1; v < p; ++v) {
            if (p % 4 == 3) {
                ASSERT_EQ(count_points(make_curve(F, v, 0), T), p + 1) << p << " a=" << v;
            }
            if (p % 3 == 2) {
                ASSERT_EQ(count_points(make_curve(F, 0, v), T), p + 1) << p << " b=" << v;
            }
        }
    }
}

TEST(HasFullTorsion, Examples) {
    EXPECT_TRUE(has_full_torsion(curve(5, 1, 1), 1));
    EXPECT_TRUE(has_full_torsion(curve(7, 0, 2), 3));
    EXPECT_FALSE(has_full_torsion(curve(5, 1, 1), 3));
    EXPECT_TRUE(has_full_torsion(curve(5, 4, 0), 2));
    EXPECT_THROW(has_full_torsion(curve(5, 1, 1), 0), domain_error);
}

TEST(HasFullTorsion, MatchesIndexDivisibilityUpTo199) {
    for (u64 p : primes_in(5, 199)) {
        const PrimeField F(p);
        const PrimeTables T(F);
        const u64 dmax = static_cast<u64>(std::sqrt(double(p)) + 1.0);
        for (u64 a = 0; a < p; ++a)
            for (u64 b = 0; b < p; ++b) {
                if (!oracle::nonsingular(a, b, p)) continue;
                const Curve c = make_curve(F, a, b);
                const u64 i = group_structure(c, T).index;
                for (u64 d = 1; d <= dmax; ++d) ASSERT_EQ(has_full_torsion(c, d, T), i % d == 0) << p << " " << d;
            }
    }
}
