#pragma once

/**
 * @file ec.hpp
 * @brief Short Weierstrass curves y^2 = x^3 + ax + b over prime fields.
 *
 * Point arithmetic, point counting by the quadratic-character sum,
 * point orders, and the certified group structure
 *
 *     E(F_p) = Z/i x Z/e,   i | e,
 *
 * where e is the group exponent and i the index of the largest cyclic
 * subgroup.
 *
 * Structure certification works one Sylow subgroup at a time. Only primes
 * l with l | p-1 and l^2 | N can make the l-part non-cyclic. For such l,
 * points are projected into the l-Sylow subgroup G_l (order l^v) and a
 * pair P, R is searched for with
 *
 *     ord P = l^c,  ord R = l^(v-c),  <P> n <R> = 0,
 *
 * which proves G_l = <P> (+) <R> = Z/l^c x Z/l^(v-c). The certificate is a
 * proof, not a probabilistic estimate: an answer is either exact or the
 * routine reports Uncertified.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecavg/numtheory.hpp"

namespace ecavg {

// =============================================================================
// Deterministic random streams
// =============================================================================

constexpr u64 splitmix64(u64 x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * A random stream keyed by (seed, stream id). Two streams with the same key
 * produce the same sequence on every platform: the engine is mt19937_64 and
 * bounded draws use rejection sampling rather than library distributions.
 */
class RngStream {
  public:
    RngStream(u64 seed, u64 stream) : engine_(splitmix64(seed ^ splitmix64(stream))) {}

    u64 next() { return engine_(); }

    /// Uniform in [0, n), n >= 1.
    u64 below(u64 n) {
        const u64 limit = std::numeric_limits<u64>::max() - std::numeric_limits<u64>::max() % n;
        u64 r;
        do r = engine_();
        while (r >= limit);
        return r % n;
    }

    /// Uniform in [lo, hi].
    i64 between(i64 lo, i64 hi) {
        return lo + static_cast<i64>(below(static_cast<u64>(hi - lo) + 1));
    }

    bool bit() { return (engine_() >> 63) != 0; }

  private:
    std::mt19937_64 engine_;
};

// =============================================================================
// Prime field
// =============================================================================

class ec_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// F_p with 5 <= p < 2^61 prime.
class PrimeField {
  public:
    static constexpr u64 max_prime = u64{1} << 61;

    explicit PrimeField(u64 p) : p_(p) {
        if (p == 2 || p == 3) throw domain_error("PrimeField: p = 2, 3 are not supported");
        if (p < 5 || p >= max_prime || !is_prime(p))
            throw domain_error("PrimeField: " + std::to_string(p) + " is not a prime in [5, 2^61)");
    }

    u64 p() const { return p_; }

    u64 add(u64 a, u64 b) const {
        u64 s = a + b;
        return s >= p_ ? s - p_ : s;
    }
    u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + p_ - b; }
    u64 neg(u64 a) const { return a == 0 ? 0 : p_ - a; }
    u64 mul(u64 a, u64 b) const { return mul_mod(a, b, p_); }
    u64 inv(u64 a) const { return inv_mod(a, p_); }
    u64 pow(u64 a, u64 e) const { return pow_mod(a, e, p_); }
    u64 from_signed(i64 v) const { return reduce(v, p_); }

    /// Legendre symbol (a/p) in {-1, 0, 1}, by the binary Jacobi algorithm.
    int legendre(u64 a) const {
        a %= p_;
        if (a == 0) return 0;
        u64 n = p_;
        int t = 1;
        while (a != 0) {
            const int z = std::countr_zero(a);
            a >>= z;
            if ((z & 1) && ((n & 7) == 3 || (n & 7) == 5)) t = -t;
            if ((a & 3) == 3 && (n & 3) == 3) t = -t;
            std::swap(a, n);
            a %= n;
        }
        return n == 1 ? t : 0;
    }

    /// A square root of a quadratic residue (Tonelli-Shanks).
    u64 sqrt(u64 a) const {
        a %= p_;
        if (a == 0) return 0;
        if (legendre(a) != 1) throw domain_error("PrimeField::sqrt: not a quadratic residue");
        if ((p_ & 3) == 3) return pow(a, (p_ + 1) / 4);
        u64 q = p_ - 1;
        const int s = std::countr_zero(q);
        q >>= s;
        u64 z = 2;
        while (legendre(z) != -1) ++z;
        u64 m = static_cast<u64>(s);
        u64 c = pow(z, q);
        u64 t = pow(a, q);
        u64 r = pow(a, (q + 1) / 2);
        while (t != 1) {
            u64 i = 0, t2 = t;
            while (t2 != 1) {
                t2 = mul(t2, t2);
                ++i;
            }
            u64 b = c;
            for (u64 j = 0; j + 1 < m - i; ++j) b = mul(b, b);
            m = i;
            c = mul(b, b);
            t = mul(t, c);
            r = mul(r, b);
        }
        return r;
    }

    /// Smallest quadratic non-residue.
    u64 non_residue() const {
        u64 v = 2;
        while (legendre(v) != -1) ++v;
        return v;
    }

    /// Smallest generator of F_p^x.
    u64 primitive_root() const {
        const auto f = factorize(p_ - 1);
        for (u64 g = 2;; ++g) {
            bool ok = true;
            for (const auto& pp : f) {
                if (pow(g, (p_ - 1) / pp.prime) == 1) {
                    ok = false;
                    break;
                }
            }
            if (ok) return g;
        }
    }

    friend bool operator==(const PrimeField&, const PrimeField&) = default;

  private:
    u64 p_;
};

/**
 * Per-prime lookup tables: quadratic character and a square root of every
 * residue. Built once, read-only afterwards, shareable across threads.
 */
class PrimeTables {
  public:
    static constexpr u64 max_prime = u64{1} << 26;

    explicit PrimeTables(const PrimeField& field) : field_(field) {
        const u64 p = field.p();
        if (p > max_prime) throw domain_error("PrimeTables: prime too large for tables");
        chi_.assign(p, -1);
        root_.assign(p, 0);
        chi_[0] = 0;
        for (u64 y = 1; y <= (p - 1) / 2; ++y) {
            const u64 r = y * y % p;
            chi_[r] = 1;
            root_[r] = static_cast<std::uint32_t>(y);
        }
    }

    const PrimeField& field() const { return field_; }
    u64 p() const { return field_.p(); }
    int chi(u64 r) const { return chi_[r]; }
    u64 root(u64 r) const { return root_[r]; }

  private:
    PrimeField field_;
    std::vector<std::int8_t> chi_;
    std::vector<std::uint32_t> root_;
};

// =============================================================================
// Curves and points
// =============================================================================

/// Why (a, b) does not define an elliptic curve.
class BadReduction : public ec_error {
  public:
    enum class Kind { singular, excluded };

    BadReduction(Kind kind, const std::string& what) : ec_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

/// 4a^3 + 27b^2 mod p.
inline u64 discriminant_part(const PrimeField& f, u64 a, u64 b) {
    return f.add(f.mul(4, f.mul(a, f.mul(a, a))), f.mul(27, f.mul(b, b)));
}

inline bool is_nonsingular(const PrimeField& f, u64 a, u64 b) {
    return discriminant_part(f, a, b) != 0;
}

class Curve {
  public:
    const PrimeField& field() const { return field_; }
    u64 p() const { return field_.p(); }
    u64 a() const { return a_; }
    u64 b() const { return b_; }

    /// x^3 + ax + b.
    u64 rhs(u64 x) const { return field_.add(field_.mul(field_.add(field_.mul(x, x), a_), x), b_); }

    friend bool operator==(const Curve&, const Curve&) = default;

  private:
    Curve(PrimeField f, u64 a, u64 b) : field_(f), a_(a), b_(b) {}
    friend Curve make_curve(const PrimeField&, u64, u64);

    PrimeField field_;
    u64 a_;
    u64 b_;
};

/// Validated construction; throws BadReduction for (0,0) or a singular cubic.
inline Curve make_curve(const PrimeField& field, u64 a, u64 b) {
    if (a >= field.p() || b >= field.p()) throw domain_error("make_curve: coefficients must be reduced mod p");
    if (a == 0 && b == 0) throw BadReduction(BadReduction::Kind::excluded, "make_curve: (a, b) = (0, 0) is excluded");
    if (!is_nonsingular(field, a, b))
        throw BadReduction(BadReduction::Kind::singular, "make_curve: 4a^3 + 27b^2 = 0 mod p");
    return Curve(field, a, b);
}

struct Point {
    u64 x = 0;
    u64 y = 0;
    bool infinity = true;

    static constexpr Point at_infinity() { return {}; }
    static constexpr Point affine(u64 x, u64 y) { return {x, y, false}; }

    friend bool operator==(const Point&, const Point&) = default;
};

inline bool on_curve(const Curve& c, const Point& P) {
    if (P.infinity) return true;
    if (P.x >= c.p() || P.y >= c.p()) return false;
    return c.field().mul(P.y, P.y) == c.rhs(P.x);
}

namespace detail {

inline void require_on_curve(const Curve& c, const Point& P) {
    if (!on_curve(c, P)) throw domain_error("point is not on the curve");
}

inline Point neg(const Curve& c, const Point& P) {
    if (P.infinity) return P;
    return Point::affine(P.x, c.field().neg(P.y));
}

inline Point add(const Curve& c, const Point& P, const Point& Q) {
    if (P.infinity) return Q;
    if (Q.infinity) return P;
    const PrimeField& F = c.field();
    u64 lambda;
    if (P.x == Q.x) {
        if (P.y != Q.y || P.y == 0) return Point::at_infinity();
        const u64 num = F.add(F.mul(3, F.mul(P.x, P.x)), c.a());
        lambda = F.mul(num, F.inv(F.add(P.y, P.y)));
    } else {
        lambda = F.mul(F.sub(Q.y, P.y), F.inv(F.sub(Q.x, P.x)));
    }
    const u64 x3 = F.sub(F.sub(F.mul(lambda, lambda), P.x), Q.x);
    const u64 y3 = F.sub(F.mul(lambda, F.sub(P.x, x3)), P.y);
    return Point::affine(x3, y3);
}

inline Point mul(const Curve& c, u64 k, Point P) {
    Point R = Point::at_infinity();
    while (k > 0) {
        if (k & 1) R = add(c, R, P);
        k >>= 1;
        if (k > 0) P = add(c, P, P);
    }
    return R;
}

}  // namespace detail

inline Point point_neg(const Curve& c, const Point& P) {
    detail::require_on_curve(c, P);
    return detail::neg(c, P);
}

/// Chord-tangent addition; the point at infinity is the identity.
inline Point point_add(const Curve& c, const Point& P, const Point& Q) {
    detail::require_on_curve(c, P);
    detail::require_on_curve(c, Q);
    return detail::add(c, P, Q);
}

/// kP by double-and-add.
inline Point scalar_mul(const Curve& c, u64 k, const Point& P) {
    detail::require_on_curve(c, P);
    return detail::mul(c, k, P);
}

// =============================================================================
// Counting and enumeration
// =============================================================================

/// Largest prime accepted by count_points (the sweep is linear in p).
inline constexpr u64 count_points_max_prime = u64{1} << 31;
/// Largest prime accepted by enumerate_points.
inline constexpr u64 enumerate_max_prime = 10'000;

/// #E(F_p) from the shared character table: p + 1 + sum_x chi(x^3 + ax + b).
inline u64 count_points(const Curve& c, const PrimeTables& t) {
    if (t.field() != c.field()) throw domain_error("count_points: table is for a different prime");
    const u64 p = c.p(), a = c.a(), b = c.b();
    i64 sum = 0;
    u64 ax = 0;  // a*x mod p, maintained incrementally
    for (u64 x = 0; x < p; ++x) {
        u64 v = x * x % p * x % p + ax;
        v += b;
        if (v >= p) v -= p;
        if (v >= p) v -= p;
        sum += t.chi(v);
        ax += a;
        if (ax >= p) ax -= p;
    }
    return static_cast<u64>(static_cast<i64>(p) + 1 + sum);
}

/// #E(F_p) for p <= 2^31, evaluating the character by the Jacobi algorithm.
inline u64 count_points(const Curve& c) {
    const u64 p = c.p();
    if (p > count_points_max_prime) throw domain_error("count_points: p exceeds the 2^31 sweep bound");
    i64 sum = 0;
    for (u64 x = 0; x < p; ++x) sum += c.field().legendre(c.rhs(x));
    return static_cast<u64>(static_cast<i64>(p) + 1 + sum);
}

/// Every point of E(F_p), infinity first, then affine points by ascending (x, y).
inline std::vector<Point> enumerate_points(const Curve& c) {
    const u64 p = c.p();
    if (p > enumerate_max_prime) throw domain_error("enumerate_points: p exceeds the oracle bound 10^4");
    std::vector<Point> pts{Point::at_infinity()};
    for (u64 x = 0; x < p; ++x) {
        const u64 r = c.rhs(x);
        if (r == 0) {
            pts.push_back(Point::affine(x, 0));
        } else if (c.field().legendre(r) == 1) {
            const u64 y = c.field().sqrt(r);
            pts.push_back(Point::affine(x, std::min(y, p - y)));
            pts.push_back(Point::affine(x, std::max(y, p - y)));
        }
    }
    return pts;
}

// =============================================================================
// Orders and group structure
// =============================================================================

/// Exact order of P given a factorization of some multiple of it.
inline u64 point_order(const Curve& c, const Point& P, const Factorization& multiple) {
    detail::require_on_curve(c, P);
    u64 m = expand(multiple);
    if (!detail::mul(c, m, P).infinity)
        throw domain_error("point_order: factorization does not annihilate the point");
    for (const auto& [q, k] : multiple) {
        for (unsigned i = 0; i < k; ++i) {
            if (!detail::mul(c, m / q, P).infinity) break;
            m /= q;
        }
    }
    return m;
}

struct GroupStructure {
    u64 order;  // N
    u64 index;  // i
    u64 exponent;  // e
    i64 trace;  // a_p = p + 1 - N

    friend bool operator==(const GroupStructure&, const GroupStructure&) = default;
};

/// Raised when certification exhausts its sampling budget.
class Uncertified : public ec_error {
  public:
    using ec_error::ec_error;
};

/**
 * Source of points for structure certification. For p up to the
 * enumeration bound the points are visited deterministically by ascending
 * x (two passes); above it they are drawn at random from an explicit stream.
 */
class PointSource {
  public:
    static constexpr u64 random_budget = 512;

    PointSource(const Curve& c, const PrimeTables* tables, RngStream rng)
        : curve_(c), tables_(tables), rng_(std::move(rng)),
          deterministic_(c.p() <= enumerate_max_prime) {}

    std::optional<Point> next() {
        return deterministic_ ? next_enumerated() : next_random();
    }

  private:
    u64 residue_root(u64 r) const {
        return tables_ ? tables_->root(r) : curve_.field().sqrt(r);
    }
    int residue_chi(u64 r) const { return tables_ ? tables_->chi(r) : curve_.field().legendre(r); }

    std::optional<Point> next_enumerated() {
        const u64 p = curve_.p();
        while (pass_ < 2) {
            if (pending_) {
                Point P = *pending_;
                pending_.reset();
                return P;
            }
            if (x_ == p) {
                x_ = 0;
                ++pass_;
                continue;
            }
            const u64 x = x_++;
            const u64 r = curve_.rhs(x);
            const int chi = residue_chi(r);
            if (chi == 0) return Point::affine(x, 0);
            if (chi == 1) {
                const u64 y = residue_root(r);
                pending_ = Point::affine(x, p - y);
                return Point::affine(x, y);
            }
        }
        return std::nullopt;
    }

    std::optional<Point> next_random() {
        if (drawn_ >= random_budget) return std::nullopt;
        ++drawn_;
        const u64 p = curve_.p();
        for (;;) {
            const u64 x = rng_.below(p);
            const u64 r = curve_.rhs(x);
            const int chi = residue_chi(r);
            if (chi == 0) return Point::affine(x, 0);
            if (chi == 1) {
                const u64 y = residue_root(r);
                return Point::affine(x, rng_.bit() ? y : p - y);
            }
        }
    }

    const Curve& curve_;
    const PrimeTables* tables_;
    RngStream rng_;
    bool deterministic_;
    unsigned pass_ = 0;
    u64 x_ = 0;
    std::optional<Point> pending_;
    u64 drawn_ = 0;
};

namespace detail {

/// Smallest j with ell^j Q = infinity, for Q in an ell-group of exponent dividing ell^cap.
inline unsigned ell_log_order(const Curve& c, Point Q, u64 ell, unsigned cap) {
    unsigned j = 0;
    while (!Q.infinity) {
        if (j == cap) return cap + 1;
        Q = mul(c, ell, Q);
        ++j;
    }
    return j;
}

inline Point mul_ell_pow(const Curve& c, Point Q, u64 ell, unsigned k) {
    for (unsigned i = 0; i < k; ++i) Q = mul(c, ell, Q);
    return Q;
}

/// x in [0, ell^n) with T = x B, where B has order ell^n; nullopt if T is not in <B>.
inline std::optional<u64> ell_dlog(const Curve& c, const Point& T, const Point& B, u64 ell, unsigned n) {
    if (n == 0) return T.infinity ? std::optional<u64>(0) : std::nullopt;
    const Point gamma = mul_ell_pow(c, B, ell, n - 1);  // order ell
    u64 x = 0, ell_j = 1;
    for (unsigned j = 0; j < n; ++j) {
        const Point residual = add(c, T, neg(c, mul(c, x, B)));
        const Point H = mul_ell_pow(c, residual, ell, n - 1 - j);
        Point acc = Point::at_infinity();
        std::optional<u64> digit;
        for (u64 d = 0; d < ell; ++d) {
            if (acc == H) {
                digit = d;
                break;
            }
            acc = add(c, acc, gamma);
        }
        if (!digit) return std::nullopt;
        x += *digit * ell_j;
        ell_j *= ell;
    }
    if (!(mul(c, x, B) == T)) return std::nullopt;
    return x;
}

/// Exponent of ell in the index i, certified by a basis of the ell-Sylow subgroup.
inline unsigned certify_sylow(const Curve& c, u64 N, u64 ell, unsigned v, PointSource& source) {
    u64 cofactor = N;
    for (unsigned i = 0; i < v; ++i) cofactor /= ell;

    Point P = Point::at_infinity();
    unsigned top = 0;  // ord P = ell^top
    while (auto X = source.next()) {
        const Point Q = mul(c, cofactor, *X);
        const unsigned d = ell_log_order(c, Q, ell, v);
        if (d > v) throw ec_error("certify_sylow: point order exceeds the Sylow bound; group order is wrong");
        if (d > top) {
            P = Q;
            top = d;
            if (top == v) return 0;  // cyclic
            continue;
        }
        const unsigned low = v - top;
        if (low > top) continue;
        // Reduce Q modulo <P> so that what is left has order ell^low.
        const Point B = mul_ell_pow(c, P, ell, low);
        const Point T = mul_ell_pow(c, Q, ell, low);
        const auto x = ell_dlog(c, T, B, ell, top - low);
        if (!x) continue;
        const Point R = add(c, Q, neg(c, mul(c, *x, P)));
        if (ell_log_order(c, R, ell, low) != low) continue;
        // <P> n <R> = 0 iff the order-ell element of <R> avoids <ell^(top-1) P>.
        const Point r1 = mul_ell_pow(c, R, ell, low - 1);
        const Point p1 = mul_ell_pow(c, P, ell, top - 1);
        bool independent = true;
        Point acc = Point::at_infinity();
        for (u64 k = 0; k < ell; ++k) {
            if (acc == r1) {
                independent = false;
                break;
            }
            acc = add(c, acc, p1);
        }
        if (independent) return low;
    }
    throw Uncertified("group_structure: could not certify the " + std::to_string(ell) +
                      "-Sylow subgroup for p = " + std::to_string(c.p()));
}

inline GroupStructure structure_from_order(const Curve& c, u64 N, const PrimeTables* tables, RngStream rng) {
    const u64 p = c.p();
    const u64 g = std::gcd(N, p - 1);
    u64 index = 1;
    if (g > 1) {
        std::optional<PointSource> source;
        for (const auto& [ell, k] : factorize(g)) {
            unsigned v = 0;
            for (u64 n = N; n % ell == 0; n /= ell) ++v;
            if (v < 2) continue;
            source.emplace(c, tables, rng);
            const unsigned low = certify_sylow(c, N, ell, v, *source);
            for (unsigned i = 0; i < low; ++i) index *= ell;
        }
    }
    const u64 e = N / index;
    GroupStructure gs{N, index, e, static_cast<i64>(p + 1) - static_cast<i64>(N)};
    // Structural consistency; a violation means a bug, never a legitimate result.
    if (e % index != 0 || (p - 1) % index != 0)
        throw ec_error("group_structure: certified structure violates i | e or i | p-1");
    return gs;
}

}  // namespace detail

/// Default sampling stream for a curve: keyed by (p, a, b).
inline RngStream curve_stream(const Curve& c, u64 seed = 0) {
    return RngStream(seed ^ splitmix64(c.p()), splitmix64(c.a()) ^ (c.b() * 0x9e3779b97f4a7c15ULL));
}

/// Certified (N, i, e, a_p) with E(F_p) = Z/i x Z/e.
inline GroupStructure group_structure(const Curve& c, const PrimeTables& tables) {
    return detail::structure_from_order(c, count_points(c, tables), &tables, curve_stream(c));
}

inline GroupStructure group_structure(const Curve& c, RngStream rng) {
    return detail::structure_from_order(c, count_points(c), nullptr, std::move(rng));
}

inline GroupStructure group_structure(const Curve& c) { return group_structure(c, curve_stream(c)); }

namespace detail {

/// Decides has_full_torsion without computing the structure, when possible.
inline std::optional<bool> full_torsion_shortcut(const Curve& c, u64 d) {
    if (d == 0) throw domain_error("has_full_torsion: d must be >= 1");
    if (d == 1) return true;
    const u64 p = c.p();
    if ((p - 1) % d != 0) return false;
    if (static_cast<double>(d) > std::sqrt(static_cast<double>(p)) + 1.0) return false;
    return std::nullopt;
}

}  // namespace detail

/// Whether E[d](F_p) = (Z/d)^2, i.e. d | i. Short-circuits when d does not divide p-1 or d > sqrt(p)+1.
inline bool has_full_torsion(const Curve& c, u64 d) {
    if (auto r = detail::full_torsion_shortcut(c, d)) return *r;
    return group_structure(c).index % d == 0;
}

inline bool has_full_torsion(const Curve& c, u64 d, const PrimeTables& tables) {
    if (auto r = detail::full_torsion_shortcut(c, d)) return *r;
    return group_structure(c, tables).index % d == 0;
}

/// Quadratic twist by v: (a, b) -> (a v^2, b v^3).
inline Curve quadratic_twist(const Curve& c, u64 v) {
    const PrimeField& F = c.field();
    const u64 v2 = F.mul(v, v);
    return make_curve(F, F.mul(c.a(), v2), F.mul(c.b(), F.mul(v2, v)));
}

}  // namespace ecavg
