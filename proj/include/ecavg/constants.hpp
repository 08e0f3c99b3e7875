#pragma once

/**
 * @file constants.hpp
 * @brief Limiting constants with rigorous truncation bounds.
 *
 *     c0(f) = sum_{d >= 1} g(d) / (d psi(d) phi(d)^2)
 *     C_k   = sum_{d >= 1} (sum_{delta | d} mu(delta) delta^k) / (d^(k+1) psi(d) phi(d)^2)
 *     K     = prod_l (1 - (l^2 - l - 1) / ((l - 1)^3 (l + 1)))
 *
 * Every value is returned with tail_bound >= |true - value|, derived from
 * the declared growth triple of g (series and Euler products of c0) or
 * from explicit prime-counting bounds (the Koblitz product).
 *
 * Weight bound used throughout, with eps = 1/8 and delta = eps/2:
 *
 *     phi(d) >= kappa d^(1 - delta),   kappa = prod_{q : q^delta (1 - 1/q) < 1} q^delta (1 - 1/q),
 *
 * so d psi(d) phi(d)^2 >= kappa^2 d^(4 - eps).
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include <boost/math/special_functions/gamma.hpp>

#include "ecavg/arith.hpp"
#include "ecavg/numtheory.hpp"

namespace ecavg {

enum class ConstantMethod { series, euler_product };

inline std::string_view to_string(ConstantMethod m) {
    return m == ConstantMethod::series ? "series" : "euler_product";
}

struct ConstantValue {
    std::string name;
    double value = 0.0;
    double tail_bound = 0.0;
    u64 truncation = 0;  // D for series, prime cutoff P for products
    ConstantMethod method = ConstantMethod::series;
};

/// Compensated summation in a fixed order.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline constexpr double tail_epsilon = 0.125;

/// kappa with phi(d) >= kappa d^(1 - eps/2) for all d >= 1.
inline double phi_lower_constant(double eps = tail_epsilon) {
    const double delta = eps / 2.0;
    double kappa = 1.0;
    // q^delta (1 - 1/q) increases in q, so stop at the first factor >= 1.
    for (u64 q : sieve_primes(1'000'000)) {
        const double factor = std::pow(static_cast<double>(q), delta) * (1.0 - 1.0 / static_cast<double>(q));
        if (factor >= 1.0) break;
        kappa *= factor;
    }
    return kappa;
}

namespace detail {

/// int_{lo}^inf t^(-sigma) (log t)^gamma dt for sigma > 1, lo > 1.
inline double log_power_tail(double lo, double sigma, double gamma) {
    const double s = sigma - 1.0;
    const double z = s * std::log(lo);
    return boost::math::tgamma(gamma + 1.0, z) / std::pow(s, gamma + 1.0);
}

/// Sum_{n > lo} (log n)^gamma n^(-sigma) via an integral past the point where the summand decreases.
inline double log_power_sum_tail(u64 lo, double sigma, double gamma) {
    const double turn = std::exp(gamma / sigma);  // summand decreasing for t >= turn
    double head = 0.0;
    u64 start = lo;
    while (static_cast<double>(start) < turn) {
        ++start;
        const double n = static_cast<double>(start);
        head += std::pow(std::log(n), gamma) * std::pow(n, -sigma);
    }
    return head + log_power_tail(std::max<double>(static_cast<double>(start), 1.5), sigma, gamma);
}

inline double weight(const Factorization& f, u64 d) {
    const double phi = static_cast<double>(euler_phi(f));
    return 1.0 / (static_cast<double>(d) * static_cast<double>(dedekind_psi(f)) * phi * phi);
}

/// Rigorous bound on sum_{d > D} |g(d)| / (d psi(d) phi(d)^2) from the growth triple.
inline double series_tail(const ArithmeticFunction& af, u64 D) {
    if (af.support() && D >= *af.support()) return 0.0;
    const auto& [beta, gamma, C] = af.growth();
    const double eps = tail_epsilon;
    const double kappa = phi_lower_constant(eps);
    double head = 0.0;
    u64 lo = D;
    if (lo < 2) {
        // The growth bound starts at x = 2; count d = 2 explicitly.
        head = std::abs(af.g(2)) * weight(factorize(2), 2);
        lo = 2;
    }
    // Abel summation against w(t) = t^-(4-eps) / kappa^2 with S(t) <= C t^(1+beta) (log t)^gamma.
    const double sigma = 4.0 - eps - beta;
    return head + C * (4.0 - eps) / (kappa * kappa) * log_power_tail(static_cast<double>(lo), sigma, gamma);
}

}  // namespace detail

/// Partial sum of c0(f) up to D with a rigorous tail bound. Requires beta < 2.
inline ConstantValue c0_series(const ArithmeticFunction& af, u64 D) {
    if (D < 1) throw domain_error("c0_series: D must be >= 1");
    if (!(af.growth().beta < 2.0)) throw domain_error("c0_series: growth exponent beta must be < 2");
    if (D > af.bound() && !af.multiplicative() && !(af.support() && *af.support() <= af.bound()))
        throw domain_error("c0_series: D exceeds the g table of " + af.name());
    const auto spf = smallest_prime_factors(static_cast<std::uint32_t>(D));
    KahanSum sum;
    for (u64 d = 1; d <= D; ++d) {
        const double gd = af.g(d);
        if (gd == 0.0) continue;
        sum.add(gd * detail::weight(factorize_with(spf, d), d));
    }
    return {"c0(" + af.name() + ")", sum.value(), detail::series_tail(af, D), D, ConstantMethod::series};
}

/**
 * c0(f) as prod_{q <= P} (1 + sum_{j >= 1} g(q^j) / (q^j psi(q^j) phi(q^j)^2))
 * for multiplicative g. The tail bound covers both omitted primes and the
 * truncated inner sums, using |g(q^j)| <= C q^(j(1+beta)) (j log q)^gamma.
 */
inline ConstantValue c0_euler(const ArithmeticFunction& af, u64 P) {
    if (!af.multiplicative()) throw domain_error("c0_euler: " + af.name() + " is not multiplicative");
    if (P < 2) throw domain_error("c0_euler: P must be >= 2");
    const auto& [beta, gamma, C] = af.growth();
    if (!(beta < 2.0)) throw domain_error("c0_euler: growth exponent beta must be < 2");
    const double sigma = 3.0 - beta;  // decay exponent of |term_1(q)|

    // |term_j(q)| <= C (j log q)^gamma q^(j(1+beta)) / (q^(4j-3) (q+1) (q-1)^2)
    auto term_bound = [&](double q, unsigned j) {
        const double denom_log = (4.0 * j - 3.0) * std::log(q) + std::log(q + 1.0) + 2.0 * std::log(q - 1.0);
        return C * std::pow(j * std::log(q), gamma) * std::exp(j * (1.0 + beta) * std::log(q) - denom_log);
    };

    double value = 1.0;
    double truncated = 0.0;  // relative bound on dropped inner terms
    for (u64 q : sieve_primes(P)) {
        const double qd = static_cast<double>(q);
        KahanSum inner;
        u64 qj = 1;
        for (unsigned j = 1;; ++j) {
            if (qj > (u64{1} << 62) / q) {
                double rest = 0.0;
                for (unsigned r = j; r < j + 64; ++r) rest += term_bound(qd, r);
                truncated += rest;
                break;
            }
            qj *= q;
            if (af.support() && qj > *af.support()) break;
            const double denom = std::pow(qd, 4.0 * j - 3.0) * (qd + 1.0) * (qd - 1.0) * (qd - 1.0);
            inner.add(af.g_prime_power(q, j) / denom);
            if (term_bound(qd, j + 1) < 1e-20 * std::max(1.0, std::abs(inner.value()))) {
                for (unsigned r = j + 1; r < j + 64; ++r) truncated += term_bound(qd, r);
                break;
            }
        }
        value *= 1.0 + inner.value();
    }

    double tail = 0.0;
    if (!(af.support() && *af.support() <= P)) {
        // Omitted primes: |h(q)| <= C rho K (log q)^gamma q^-(3-beta) for q > P.
        const double next = static_cast<double>(P) + 1.0;
        const double rho = next * next * next / ((next + 1.0) * (next - 1.0) * (next - 1.0));
        double K = 0.0;
        for (unsigned j = 1; j < 200; ++j) K += std::pow(static_cast<double>(j), gamma) * std::pow(next, -(j - 1.0) * sigma);
        const double scale = C * rho * K;
        const double sum_h = scale * detail::log_power_sum_tail(P, sigma, gamma);
        const double h_max = scale * std::pow(std::log(next), gamma) * std::pow(next, -sigma);
        if (h_max >= 0.5) {
            tail = std::numeric_limits<double>::infinity();
        } else {
            const double log_bound = sum_h / (1.0 - h_max) + 2.0 * truncated;
            tail = std::abs(value) * std::expm1(log_bound);
        }
    } else {
        tail = std::abs(value) * std::expm1(2.0 * truncated);
    }
    return {"c0(" + af.name() + ")", value, tail, P, ConstantMethod::euler_product};
}

/**
 * C_k summed directly from its definition up to D. The numerator is
 * prod_{q | d} (1 - q^k) and |numerator| <= tau(d) d^k, so each term is at
 * most tau(d) / (d psi(d) phi(d)^2); the tail uses sum_{d <= x} tau(d) <= 3 x log x.
 */
inline ConstantValue moment_constant(unsigned k, u64 D) {
    if (k < 1) throw domain_error("moment_constant: k must be >= 1");
    if (D < 1) throw domain_error("moment_constant: D must be >= 1");
    const auto spf = smallest_prime_factors(static_cast<std::uint32_t>(D));
    KahanSum sum;
    for (u64 d = 1; d <= D; ++d) {
        const auto f = factorize_with(spf, d);
        double numer_over_dk = 1.0;  // (sum_{delta | d} mu(delta) delta^k) / d^k
        for (const auto& [q, e] : f) {
            const double qk = std::pow(static_cast<double>(q), k);
            numer_over_dk *= (1.0 - qk) / std::pow(qk, e);
        }
        sum.add(numer_over_dk * detail::weight(f, d));
    }
    // Same tail as a g with growth (0, 1, 3).
    const double kappa = phi_lower_constant();
    const double eps = tail_epsilon;
    double head = 0.0;
    u64 lo = D;
    if (lo < 2) {
        head = std::abs(1.0 - std::pow(2.0, k)) / std::pow(2.0, k) * detail::weight(factorize(2), 2);
        lo = 2;
    }
    const double tail = head + 3.0 * (4.0 - eps) / (kappa * kappa) *
                                   detail::log_power_tail(static_cast<double>(lo), 4.0 - eps, 1.0);
    return {"C_" + std::to_string(k), sum.value(), tail, D, ConstantMethod::series};
}

/// One factor 1 - (l^2 - l - 1) / ((l - 1)^3 (l + 1)) of the Koblitz product.
inline double koblitz_factor(u64 ell) {
    const double l = static_cast<double>(ell);
    return 1.0 - (l * l - l - 1.0) / ((l - 1.0) * (l - 1.0) * (l - 1.0) * (l + 1.0));
}

/**
 * prod_{l <= P} of koblitz_factor. Omitted factors are 1 - h(l) with
 * 0 < h(l) <= 1/(l-1)^2; their prime sum is bounded by Abel summation
 * against pi(t) < 1.25506 t / log t, and pi(P) > P / log P for P >= 17.
 */
inline ConstantValue koblitz_constant(u64 P) {
    if (P < 2) throw domain_error("koblitz_constant: P must be >= 2");
    double value = 1.0;
    for (u64 ell : sieve_primes(P)) value *= koblitz_factor(ell);
    const double Pd = static_cast<double>(P);
    double sum_h;
    if (P >= 17) {
        const double lp = std::log(Pd);
        sum_h = 1.25506 / lp * (2.0 / (Pd - 1.0) + 1.0 / ((Pd - 1.0) * (Pd - 1.0))) - Pd / (lp * (Pd - 1.0) * (Pd - 1.0));
    } else {
        sum_h = 1.0 / (Pd - 1.0);
    }
    const double h_max = 1.0 / (Pd * Pd);  // next prime l >= P+1 gives 1/(l-1)^2 <= 1/P^2
    const double tail = value * std::expm1(sum_h / (1.0 - h_max));
    return {"koblitz", value, tail, P, ConstantMethod::euler_product};
}

}  // namespace ecavg
