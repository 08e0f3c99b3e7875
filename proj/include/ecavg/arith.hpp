#pragma once

/**
 * @file arith.hpp
 * @brief Arithmetic functions paired by f(n) = sum_{d | n} g(d).
 *
 * An ArithmeticFunction carries f (evaluable at any n), its Moebius
 * partner g tabulated on [1, D], and a declared growth triple
 * (beta, gamma, C) asserting
 *
 *     sum_{d <= x} |g(d)| <= C x^(1 + beta) (log x)^gamma   for x >= 2.
 *
 * Rational-valued functions also carry exact f and g so that census
 * identities can be checked without rounding.
 */

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ecavg/numtheory.hpp"

namespace ecavg {

using Rational = boost::multiprecision::cpp_rational;

struct GrowthBound {
    double beta = 0.0;
    double gamma = 0.0;
    double constant = 1.0;
};

/// Moebius function on [0, limit] by a linear sieve; entry 0 is unused.
inline std::vector<int> moebius_table(u64 limit) {
    std::vector<int> mu(limit + 1, 1);
    std::vector<bool> composite(limit + 1, false);
    std::vector<u64> primes;
    mu[0] = 0;
    for (u64 i = 2; i <= limit; ++i) {
        if (!composite[i]) {
            primes.push_back(i);
            mu[i] = -1;
        }
        for (u64 q : primes) {
            if (i * q > limit) break;
            composite[i * q] = true;
            if (i % q == 0) {
                mu[i * q] = 0;
                break;
            }
            mu[i * q] = -mu[i];
        }
    }
    return mu;
}

/// g(n) = sum_{d | n} mu(n/d) f(d) for n in [1, D]; index 0 is unused.
template <class T, class F>
std::vector<T> moebius_invert(F&& f, u64 D) {
    if (D < 1) throw domain_error("moebius_invert: D must be >= 1");
    const auto mu = moebius_table(D);
    std::vector<T> g(D + 1, T(0));
    for (u64 d = 1; d <= D; ++d) {
        const T fd = f(d);
        if (fd == T(0)) continue;
        for (u64 m = 1; d * m <= D; ++m) {
            if (mu[m] == 1)
                g[d * m] += fd;
            else if (mu[m] == -1)
                g[d * m] -= fd;
        }
    }
    return g;
}

inline std::vector<double> moebius_invert(const std::function<double(u64)>& f, u64 D) {
    return moebius_invert<double>(f, D);
}

class ArithmeticFunction {
  public:
    using RealFn = std::function<double(u64)>;
    using ExactFn = std::function<Rational(u64)>;

    /// Default bound for exact tables; exact identities are only needed at census scale.
    static constexpr u64 default_exact_bound = 10'000;

    /**
     * Build from f. g is obtained by Moebius inversion on [1, D]. For
     * multiplicative f (hence g), g is also available past D through
     * g(q^k) = f(q^k) - f(q^(k-1)).
     */
    ArithmeticFunction(std::string name, RealFn f, u64 D, GrowthBound growth, bool multiplicative,
                       std::optional<ExactFn> f_exact = std::nullopt,
                       std::optional<u64> support = std::nullopt)
        : name_(std::move(name)), f_(std::move(f)), f_exact_(std::move(f_exact)),
          multiplicative_(multiplicative), growth_(growth), support_(support) {
        if (D < 1) throw domain_error("ArithmeticFunction: D must be >= 1");
        g_ = moebius_invert<double>(f_, D);
        if (f_exact_) g_exact_ = moebius_invert<Rational>(*f_exact_, std::min(D, default_exact_bound));
    }

    const std::string& name() const { return name_; }
    u64 bound() const { return g_.size() - 1; }
    bool multiplicative() const { return multiplicative_; }
    bool is_rational() const { return f_exact_.has_value(); }
    const GrowthBound& growth() const { return growth_; }
    /// g vanishes past this point, when known.
    const std::optional<u64>& support() const { return support_; }

    double f(u64 n) const { return f_(n); }

    Rational f_exact(u64 n) const {
        if (!f_exact_) throw domain_error(name_ + ": not rational-valued");
        return (*f_exact_)(n);
    }

    /// g(n); past the table only for multiplicative functions.
    double g(u64 n) const {
        if (n == 0) throw domain_error("g: n must be >= 1");
        if (n < g_.size()) return g_[n];
        if (support_ && n > *support_) return 0.0;
        if (!multiplicative_) throw domain_error(name_ + ": g(" + std::to_string(n) + ") is past the table");
        double r = 1.0;
        for (const auto& [q, k] : factorize(n)) r *= g_prime_power(q, k);
        return r;
    }

    /// g(q^k) = f(q^k) - f(q^(k-1)) for multiplicative f.
    double g_prime_power(u64 q, unsigned k) const {
        if (!multiplicative_) throw domain_error(name_ + ": g_prime_power requires a multiplicative function");
        u64 qk = 1;
        for (unsigned i = 0; i < k; ++i) qk *= q;
        if (qk < g_.size()) return g_[qk];
        return f_(qk) - f_(qk / q);
    }

    Rational g_exact(u64 n) const {
        if (n == 0 || n >= g_exact_.size()) throw domain_error(name_ + ": exact g(" + std::to_string(n) + ") unavailable");
        return g_exact_[n];
    }

    u64 exact_bound() const { return g_exact_.empty() ? 0 : g_exact_.size() - 1; }

    const std::vector<double>& g_table() const { return g_; }

  private:
    std::string name_;
    RealFn f_;
    std::optional<ExactFn> f_exact_;
    bool multiplicative_;
    GrowthBound growth_;
    std::optional<u64> support_;
    std::vector<double> g_;
    std::vector<Rational> g_exact_;
};

// =============================================================================
// Built-in families
// =============================================================================

namespace detail {

inline Rational rational_pow(const Rational& x, unsigned k) {
    Rational r = 1;
    for (unsigned i = 0; i < k; ++i) r *= x;
    return r;
}

inline double parse_real(std::string_view s, std::string_view spec) {
    try {
        std::size_t used = 0;
        const double v = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw domain_error("builtin: bad parameter '" + std::string(s) + "' in '" + std::string(spec) + "'");
    }
}

inline unsigned parse_count(std::string_view s, std::string_view spec) {
    unsigned v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw domain_error("builtin: bad integer parameter '" + std::string(s) + "' in '" + std::string(spec) + "'");
    return v;
}

inline std::vector<std::string_view> split_params(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(s.substr(0, comma));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// sum_{n <= x} tau_m(n) <= x (1 + log x)^(m-1), and (1 + log x) / log x <= 2.443 for x >= 2.
inline GrowthBound tau_m_growth(double m) {
    if (m <= 1.0) return {0.0, 0.0, 1.0};
    return {0.0, m - 1.0, std::pow(2.443, m - 1.0)};
}

}  // namespace detail

/// Names accepted by builtin(), for help text.
inline constexpr std::string_view builtin_names =
    "cyclicity, tau, power_neg:k, power:beta, sigma:beta, log_pow:alpha, omega_pow:k, "
    "bigomega_pow:k, two_pow_k_omega:k, tau_k_pow:k,r";

/**
 * Built-in function from a spec string "name[:params]". D is the g-table
 * bound. Parameters outside the admissible range are rejected.
 */
inline ArithmeticFunction builtin(std::string_view spec, u64 D = 100'000) {
    const auto colon = spec.find(':');
    const std::string_view name = spec.substr(0, colon);
    const std::string_view params = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    const auto args = params.empty() ? std::vector<std::string_view>{} : detail::split_params(params);
    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw domain_error("builtin: '" + std::string(name) + "' takes " + std::to_string(n) + " parameter(s)");
    };
    const std::string label(spec);

    if (name == "cyclicity") {
        want(0);
        return ArithmeticFunction(
            label, [](u64 n) { return n == 1 ? 1.0 : 0.0; }, D, {0.0, 1.0, 2.0}, true,
            [](u64 n) { return Rational(n == 1 ? 1 : 0); });
    }
    if (name == "tau") {
        want(0);
        return ArithmeticFunction(
            label, [](u64 n) { return static_cast<double>(num_divisors(n)); }, D, {0.0, 1.0, 2.0}, true,
            [](u64 n) { return Rational(num_divisors(n)); });
    }
    if (name == "power_neg") {
        want(1);
        const unsigned k = detail::parse_count(args[0], spec);
        if (k < 1) throw domain_error("builtin: power_neg needs k >= 1");
        // |g(d)| <= tau(d): summatory bound 3 x log x for x >= 2.
        return ArithmeticFunction(
            label, [k](u64 n) { return std::pow(static_cast<double>(n), -static_cast<double>(k)); }, D,
            {0.0, 1.0, 3.0}, true,
            [k](u64 n) { return detail::rational_pow(Rational(1, n), k); });
    }
    if (name == "power" || name == "sigma") {
        want(1);
        const double beta = detail::parse_real(args[0], spec);
        if (!(beta >= 0.0 && beta < 1.0)) throw domain_error("builtin: " + std::string(name) + " needs 0 <= beta < 1");
        // power: 0 <= g(n) <= n^beta.  sigma: g(n) = n^beta exactly.
        std::optional<u64> support;
        std::optional<ArithmeticFunction::ExactFn> exact;
        if (beta == 0.0) {
            if (name == "power") support = 1;
            exact = name == "power" ? ArithmeticFunction::ExactFn([](u64) { return Rational(1); })
                                    : ArithmeticFunction::ExactFn([](u64 n) { return Rational(num_divisors(n)); });
        }
        ArithmeticFunction::RealFn f;
        if (name == "power")
            f = [beta](u64 n) { return std::pow(static_cast<double>(n), beta); };
        else
            f = [beta](u64 n) {
                double s = 0.0;
                for (u64 m : divisors(n)) s += std::pow(static_cast<double>(m), beta);
                return s;
            };
        return ArithmeticFunction(label, f, D, {beta, 0.0, 1.0}, true, exact, support);
    }
    if (name == "log_pow") {
        want(1);
        const double alpha = detail::parse_real(args[0], spec);
        if (!(alpha > 0.0)) throw domain_error("builtin: log_pow needs alpha > 0");
        // |g(n)| <= sum_{d | n} |f(d)| <= tau(n) (log n)^alpha.
        return ArithmeticFunction(
            label, [alpha](u64 n) { return std::pow(std::log(static_cast<double>(n)), alpha); }, D,
            {0.0, alpha + 1.0, 3.0}, false);
    }
    if (name == "omega_pow" || name == "bigomega_pow") {
        want(1);
        const unsigned k = detail::parse_count(args[0], spec);
        const bool big = name == "bigomega_pow";
        auto count = [big](u64 n) -> u64 {
            if (n == 1) return 0;
            const auto f = factorize(n);
            return big ? big_omega(f) : omega(f);
        };
        // |g(n)| <= tau(n) (log n / log 2)^k.
        const GrowthBound growth = k == 0 ? GrowthBound{0.0, 0.0, 1.0}
                                          : GrowthBound{0.0, k + 1.0, 3.0 / std::pow(std::log(2.0), k)};
        return ArithmeticFunction(
            label, [count, k](u64 n) { return std::pow(static_cast<double>(count(n)), k); }, D, growth, k == 0,
            [count, k](u64 n) { return detail::rational_pow(Rational(count(n)), k); },
            k == 0 ? std::optional<u64>(1) : std::nullopt);
    }
    if (name == "two_pow_k_omega") {
        want(1);
        const unsigned k = detail::parse_count(args[0], spec);
        if (k > 20) throw domain_error("builtin: two_pow_k_omega needs k <= 20");
        auto value = [k](u64 n) -> u64 { return n == 1 ? 1 : u64{1} << (k * omega(factorize(n))); };
        // g(n) = mu(n)^2 (2^k - 1)^omega(n) <= tau_{2^k - 1}(n).
        return ArithmeticFunction(
            label, [value](u64 n) { return static_cast<double>(value(n)); }, D,
            detail::tau_m_growth(std::pow(2.0, k) - 1.0), true, [value](u64 n) { return Rational(value(n)); },
            k == 0 ? std::optional<u64>(1) : std::nullopt);
    }
    if (name == "tau_k_pow") {
        want(2);
        const unsigned k = detail::parse_count(args[0], spec);
        const unsigned r = detail::parse_count(args[1], spec);
        if (k < 1) throw domain_error("builtin: tau_k_pow needs k >= 1");
        auto value = [k, r](u64 n) {
            const u64 t = tau_k(factorize(n), k);
            Rational v = 1;
            for (unsigned i = 0; i < r; ++i) v *= t;
            return v;
        };
        // 0 <= g(n) <= tau_k(n)^r <= tau_{k^r}(n).
        return ArithmeticFunction(
            label, [value](u64 n) { return static_cast<double>(value(n)); }, D,
            detail::tau_m_growth(std::pow(static_cast<double>(k), r)), true, value,
            (r == 0 || k == 1) ? std::optional<u64>(1) : std::nullopt);
    }
    throw domain_error("builtin: unknown function '" + std::string(name) + "' (known: " + std::string(builtin_names) + ")");
}

// =============================================================================
// Growth validation
// =============================================================================

/// Declared growth constant is smaller than an observed partial-sum ratio.
class GrowthViolation : public domain_error {
  public:
    GrowthViolation(u64 witness, double observed, double declared)
        : domain_error("declared growth bound violated at x = " + std::to_string(witness) + ": ratio " +
                       std::to_string(observed) + " exceeds constant " + std::to_string(declared)),
          witness_(witness), observed_(observed) {}

    u64 witness() const { return witness_; }
    double observed() const { return observed_; }

  private:
    u64 witness_;
    double observed_;
};

/**
 * Smallest c such that sum_{d <= x} |g(d)| <= c x^(1+beta) (log x)^gamma
 * for every 2 <= x <= X. The ratio is maximal at integers, so an exact
 * scan suffices. Throws GrowthViolation if c exceeds the declared constant.
 */
inline double validate_growth(const ArithmeticFunction& af, u64 X) {
    if (X < 2) throw domain_error("validate_growth: X must be >= 2");
    const auto& [beta, gamma, declared] = af.growth();
    double partial = std::abs(af.g(1));
    double best = 0.0;
    u64 witness = 2;
    for (u64 x = 2; x <= X; ++x) {
        partial += std::abs(af.g(x));
        const double lx = std::log(static_cast<double>(x));
        const double ratio = partial / (std::pow(static_cast<double>(x), 1.0 + beta) * std::pow(lx, gamma));
        if (ratio > best) {
            best = ratio;
            witness = x;
        }
    }
    if (best > declared) throw GrowthViolation(witness, best, declared);
    return best;
}

}  // namespace ecavg
