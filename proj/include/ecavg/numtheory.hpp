#pragma once

/**
 * @file numtheory.hpp
 * @brief Elementary number theory on 64-bit integers.
 *
 * Prime sieving, deterministic primality, factorization (trial division
 * followed by Pollard-rho), the classical multiplicative functions,
 * divisor enumeration, smooth-number counting and the offset logarithmic
 * integral li(x) = int_2^x dt / log t.
 *
 * Everything here is a pure function of its arguments.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ecavg {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

/// Thrown for arguments outside an operation's domain.
class domain_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// =============================================================================
// Modular arithmetic
// =============================================================================

constexpr u64 mul_mod(u64 a, u64 b, u64 m) {
    return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

constexpr u64 pow_mod(u64 base, u64 exp, u64 m) {
    u64 result = 1 % m;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

/// Inverse of a modulo m via the extended Euclidean algorithm; a must be a unit.
constexpr u64 inv_mod(u64 a, u64 m) {
    i64 old_r = static_cast<i64>(a % m), r = static_cast<i64>(m);
    i64 old_s = 1, s = 0;
    while (r != 0) {
        i64 q = old_r / r;
        old_r -= q * r;
        std::swap(old_r, r);
        old_s -= q * s;
        std::swap(old_s, s);
    }
    if (old_r != 1) throw domain_error("inv_mod: argument is not a unit");
    return static_cast<u64>(old_s < 0 ? old_s + static_cast<i64>(m) : old_s);
}

/// Reduce a signed integer into [0, m).
constexpr u64 reduce(i64 v, u64 m) {
    i64 r = v % static_cast<i64>(m);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(m) : r);
}

// =============================================================================
// Primality
// =============================================================================

namespace detail {

constexpr bool strong_probable_prime(u64 n, u64 a) {
    a %= n;
    if (a == 0) return true;
    u64 d = n - 1;
    int r = std::countr_zero(d);
    d >>= r;
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) return true;
    for (int i = 1; i < r; ++i) {
        x = mul_mod(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

}  // namespace detail

/// Deterministic for all 64-bit n (Sinclair's seven-base witness set).
constexpr bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 q : {2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u, 37u}) {
        if (n % q == 0) return n == q;
    }
    if (n < 41 * 41) return true;
    for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
        if (!detail::strong_probable_prime(n, a)) return false;
    }
    return true;
}

/// Primes in [2, limit], ascending (Eratosthenes over odd numbers).
inline std::vector<u64> sieve_primes(u64 limit) {
    std::vector<u64> primes;
    if (limit < 2) return primes;
    primes.push_back(2);
    const u64 half = (limit - 1) / 2;  // index i <-> 2i+1, i in [1, half]
    std::vector<bool> composite(half + 1, false);
    for (u64 i = 1; i <= half; ++i) {
        if (composite[i]) continue;
        const u64 q = 2 * i + 1;
        primes.push_back(q);
        for (u64 j = (q * q - 1) / 2; j <= half; j += q) composite[j] = true;
    }
    return primes;
}

// =============================================================================
// Factorization
// =============================================================================

struct PrimePower {
    u64 prime;
    unsigned exponent;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// Ascending prime-power decomposition; empty for n = 1.
using Factorization = std::vector<PrimePower>;

/// Product of prime^exponent over the factorization.
inline u64 expand(const Factorization& f) {
    u64 n = 1;
    for (const auto& [q, k] : f)
        for (unsigned i = 0; i < k; ++i) n *= q;
    return n;
}

namespace detail {

inline u64 pollard_rho(u64 n) {
    if (n % 2 == 0) return 2;
    // Brent's variant; retries with a new increment on failure.
    for (u64 c = 1;; ++c) {
        auto step = [&](u64 v) { return (mul_mod(v, v, n) + c) % n; };
        u64 y = 2, x = 2, g = 1, q = 1, ys = 2;
        u64 r = 1;
        constexpr u64 m = 128;
        do {
            x = y;
            for (u64 i = 0; i < r; ++i) y = step(y);
            u64 k = 0;
            do {
                ys = y;
                for (u64 i = 0; i < std::min(m, r - k); ++i) {
                    y = step(y);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                g = std::gcd(q, n);
                k += m;
            } while (k < r && g == 1);
            r *= 2;
        } while (g == 1);
        if (g == n) {
            do {
                ys = step(ys);
                g = std::gcd(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n) return g;
    }
}

inline void factor_into(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    u64 d = pollard_rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

}  // namespace detail

/// Factor 1 <= n < 2^62. Trial division below 2^16, then Pollard-rho.
inline Factorization factorize(u64 n) {
    if (n == 0) throw domain_error("factorize: n must be >= 1");
    if (n >= (u64{1} << 62)) throw domain_error("factorize: n must be < 2^62");
    std::vector<u64> raw;
    for (u64 q = 2; q < (1u << 16) && q * q <= n; q += (q == 2 ? 1 : 2)) {
        while (n % q == 0) {
            raw.push_back(q);
            n /= q;
        }
    }
    detail::factor_into(n, raw);
    std::sort(raw.begin(), raw.end());
    Factorization f;
    for (u64 q : raw) {
        if (!f.empty() && f.back().prime == q)
            ++f.back().exponent;
        else
            f.push_back({q, 1});
    }
    return f;
}

/// All divisors of n, ascending.
inline std::vector<u64> divisors(const Factorization& f) {
    std::vector<u64> ds{1};
    for (const auto& [q, k] : f) {
        const std::size_t base = ds.size();
        u64 pk = 1;
        for (unsigned e = 1; e <= k; ++e) {
            pk *= q;
            for (std::size_t i = 0; i < base; ++i) ds.push_back(ds[i] * pk);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

inline std::vector<u64> divisors(u64 n) { return divisors(factorize(n)); }

// =============================================================================
// Multiplicative functions
// =============================================================================

inline u64 euler_phi(const Factorization& f) {
    u64 r = 1;
    for (const auto& [q, k] : f) {
        r *= q - 1;
        for (unsigned i = 1; i < k; ++i) r *= q;
    }
    return r;
}

/// Dedekind psi: n * prod_{q | n} (1 + 1/q).
inline u64 dedekind_psi(const Factorization& f) {
    u64 r = 1;
    for (const auto& [q, k] : f) {
        r *= q + 1;
        for (unsigned i = 1; i < k; ++i) r *= q;
    }
    return r;
}

inline int moebius(const Factorization& f) {
    for (const auto& pp : f)
        if (pp.exponent > 1) return 0;
    return (f.size() % 2 == 0) ? 1 : -1;
}

/// Number of ordered factorizations of n into k positive factors.
inline u64 tau_k(const Factorization& f, unsigned k) {
    if (k == 0) throw domain_error("tau_k: k must be >= 1");
    // tau_k(q^e) = C(e + k - 1, k - 1)
    u64 r = 1;
    for (const auto& pp : f) {
        u64 c = 1;
        for (unsigned i = 1; i <= pp.exponent; ++i) c = c * (k - 1 + i) / i;
        r *= c;
    }
    return r;
}

inline u64 num_divisors(const Factorization& f) { return tau_k(f, 2); }
inline u64 omega(const Factorization& f) { return f.size(); }
inline u64 big_omega(const Factorization& f) {
    u64 r = 0;
    for (const auto& pp : f) r += pp.exponent;
    return r;
}

inline u64 euler_phi(u64 n) { return euler_phi(factorize(n)); }
inline u64 dedekind_psi(u64 n) { return dedekind_psi(factorize(n)); }
inline int moebius(u64 n) { return moebius(factorize(n)); }
inline u64 num_divisors(u64 n) { return num_divisors(factorize(n)); }

/**
 * Evaluate a named multiplicative function: phi, psi, mu, tau, omega,
 * big_omega, or tau_k (which takes the extra parameter k).
 */
inline i64 mult_fn(std::string_view name, u64 n, unsigned k = 2) {
    const auto f = factorize(n);
    if (name == "phi") return static_cast<i64>(euler_phi(f));
    if (name == "psi") return static_cast<i64>(dedekind_psi(f));
    if (name == "mu") return moebius(f);
    if (name == "tau") return static_cast<i64>(num_divisors(f));
    if (name == "omega") return static_cast<i64>(omega(f));
    if (name == "big_omega") return static_cast<i64>(big_omega(f));
    if (name == "tau_k") return static_cast<i64>(tau_k(f, k));
    throw domain_error("mult_fn: unknown function '" + std::string(name) + "'");
}

/// Smallest-prime-factor table on [0, limit]; spf[0] = spf[1] = 0.
inline std::vector<std::uint32_t> smallest_prime_factors(std::uint32_t limit) {
    std::vector<std::uint32_t> spf(static_cast<std::size_t>(limit) + 1, 0);
    for (std::uint32_t i = 2; i <= limit; ++i) {
        if (spf[i] != 0) continue;
        for (u64 j = i; j <= limit; j += i)
            if (spf[j] == 0) spf[j] = i;
    }
    return spf;
}

/// Factorization read off an spf table (n <= table size - 1).
inline Factorization factorize_with(const std::vector<std::uint32_t>& spf, u64 n) {
    Factorization f;
    while (n > 1) {
        const u64 q = spf[n];
        unsigned k = 0;
        while (n % q == 0) {
            n /= q;
            ++k;
        }
        f.push_back({q, k});
    }
    return f;
}

// =============================================================================
// Smooth numbers
// =============================================================================

struct SmoothCountQuery {
    u64 limit;     // X
    double bound;  // Y
};

namespace detail {

// Count of n in [1, x] whose prime factors all lie in primes[0..k].
inline u64 smooth_upto(u64 x, const std::vector<u64>& primes, std::size_t k) {
    if (x == 0) return 0;
    const u64 q = primes[k];
    if (k == 0) return static_cast<u64>(std::bit_width(x));  // powers of two
    if (q >= x) {
        // Every n <= x has all prime factors <= q once q >= x.
        return x;
    }
    u64 total = 0;
    for (u64 m = x;; m /= q) {
        total += smooth_upto(m, primes, k - 1);
        if (m < q) break;
    }
    return total;
}

}  // namespace detail

/// #{2 <= n <= X : largest prime factor of n <= Y}. n = 1 is not counted.
inline u64 smooth_count(const SmoothCountQuery& q) {
    if (q.limit < 2 || q.bound < 2.0) return 0;
    const u64 y = q.bound >= static_cast<double>(q.limit)
                      ? q.limit
                      : static_cast<u64>(std::floor(q.bound));
    const auto primes = sieve_primes(y);
    return detail::smooth_upto(q.limit, primes, primes.size() - 1) - 1;
}

// =============================================================================
// Logarithmic integral
// =============================================================================

/**
 * li(x) = int_2^x dt / log t, by adaptive Gauss-Kronrod on the substitution
 * t = e^u, where the integrand e^u / u is smooth on [log 2, log x].
 * The error target is absolute 1e-10 or relative 1e-14, whichever is larger.
 */
inline double log_integral(double x) {
    if (!(x >= 2.0)) throw domain_error("log_integral: x must be >= 2");
    if (x == 2.0) return 0.0;
    const double lo = std::log(2.0), hi = std::log(x);
    auto integrand = [](double u) { return std::exp(u) / u; };
    // Piecewise in u so each panel spans a bounded dynamic range of e^u.
    constexpr double panel = 2.0;
    double total = 0.0, comp = 0.0;
    for (double a = lo; a < hi; a += panel) {
        const double b = std::min(hi, a + panel);
        double err = 0.0;
        const double part = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, a, b, 15, 1e-15, &err);
        const double y = part - comp;
        const double t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    return total;
}

}  // namespace ecavg
