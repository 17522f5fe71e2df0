#pragma once

#include "ballistic/rational.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace ballistic {

enum class Regime { Sub, Crit, Super };

inline const char* to_string(Regime r)
{
    switch (r) {
    case Regime::Sub: return "SUB";
    case Regime::Crit: return "CRIT";
    case Regime::Super: return "SUPER";
    }
    return "?";
}

namespace gamma_constants {
// Gamma(1/3) and Gamma(2/3), 40 digits (mpmath, 50-digit working precision).
inline constexpr long double gamma_1_3 = 2.678938534707747633655692940974677644129L;
inline constexpr long double gamma_2_3 = 1.354117939426400416945288028154513785519L;

/// Reflection check: Gamma(1/3) Gamma(2/3) = 2 pi / sqrt 3.
inline bool reflection_ok(long double tol = 1e-15L)
{
    const long double pi = 3.141592653589793238462643383279502884L;
    return std::fabs(gamma_1_3 * gamma_2_3 - 2 * pi / std::sqrt(3.0L)) < tol;
}

inline const bool validated = [] {
    if (!reflection_ok())
        throw std::logic_error("embedded Gamma constants fail the reflection identity");
    return true;
}();
} // namespace gamma_constants

inline constexpr double pi = 3.141592653589793238462643383279502884;

inline Regime regime_of(const Rational& p)
{
    int c = cmp(p, Rational(1, 4));
    return c < 0 ? Regime::Sub : c == 0 ? Regime::Crit : Regime::Super;
}

inline void check_open_unit(const Rational& p)
{
    if (p <= 0 || p >= 1)
        throw std::invalid_argument("p must lie in (0,1)");
}

/// Closed-form constants at a fixed p. Fields that only
/// exist in the supercritical regime are NaN elsewhere.
struct RegimeConstants {
    Rational p;
    Regime regime = Regime::Sub;
    double q = 1, theta = 0;
    double R = std::numeric_limits<double>::quiet_NaN();
    double C_p = std::numeric_limits<double>::quiet_NaN();
    double meanA_given_finite = std::numeric_limits<double>::infinity(); // closed form sqrt(p)/((2 sqrt p - 1)(1 - 2 sqrt p + 2p))
    double meanA_from_quartic = std::numeric_limits<double>::infinity(); // f'(1)/f(1) from F(z, f(z)) = 0
    double pA_prefactor = 0, pA_exponent = 0; // P(A=n) ~ prefactor R^-n n^exponent (R = 1 unless SUPER)
    double c0_const = 0, c0_exponent = 0;     // c0(t) ~ const t^exponent (limit when SUPER)
    double cplus_const = 0, cplus_exponent = 0;
    std::array<double, 4> skyline_sigma_law{}; // up, right-up, up-left, right-left
};

inline double growth_rate_R(double p)
{
    return 3.0 / (8 * p + 1) * std::sqrt(3 * p / (1 - p));
}

inline RegimeConstants closed_forms(const Rational& p_exact)
{
    check_open_unit(p_exact);
    (void)gamma_constants::validated;
    const double p = to_double(p_exact);
    const double sp = std::sqrt(p);
    const double g13 = static_cast<double>(gamma_constants::gamma_1_3);
    const double g23 = static_cast<double>(gamma_constants::gamma_2_3);

    RegimeConstants k;
    k.p = p_exact;
    k.regime = regime_of(p_exact);
    k.skyline_sigma_law = {p, sp * (1 - sp), sp * (1 - sp), (1 - sp) * (1 - sp)};
    switch (k.regime) {
    case Regime::Sub:
        k.pA_prefactor = std::sqrt(2.0) / std::sqrt(pi * (1 - 4 * p));
        k.pA_exponent = -1.5;
        k.c0_const = 2 * p / (pi * (1 - 4 * p));
        k.c0_exponent = -1;
        k.cplus_const = std::sqrt(1 - 4 * p) / std::sqrt(pi);
        k.cplus_exponent = -0.5;
        break;
    case Regime::Crit:
        k.pA_prefactor = std::cbrt(16.0) / (3 * g23);
        k.pA_exponent = -4.0 / 3;
        k.c0_const = std::cbrt(4.0) / (4 * g23 * g23);
        k.c0_exponent = -2.0 / 3;
        k.cplus_const = std::cbrt(4.0) / (8 * g23 * g23) + 3 / (8 * g13);
        k.cplus_exponent = -2.0 / 3;
        break;
    case Regime::Super:
        k.q = 1 / sp - 1;
        k.theta = (2 - 1 / sp) * (2 - 1 / sp);
        k.R = growth_rate_R(p);
        k.C_p = std::sqrt(2.0) / (3 * std::sqrt(pi)) * std::sqrt((8 * p + 1) * (1 - p) / (p * (4 * p - 1)));
        k.meanA_given_finite = sp / ((2 * sp - 1) * (1 - 2 * sp + 2 * p));
        k.meanA_from_quartic = sp / ((2 * sp - 1) * (2 * sp - 1));
        k.pA_prefactor = k.C_p;
        k.pA_exponent = -1.5;
        k.c0_const = (2 * sp - 1) * (2 * sp - 1);
        k.c0_exponent = 0;
        k.cplus_const = 0;
        k.cplus_exponent = 0;
        break;
    }
    return k;
}

/// Leading-order P(A = n) for odd n.
inline double asymptotic_pA(const Rational& p, long n)
{
    if (n < 1 || n % 2 == 0)
        throw std::invalid_argument("asymptotic_pA needs odd n >= 1");
    auto k = closed_forms(p);
    double v = k.pA_prefactor * std::pow(double(n), k.pA_exponent);
    if (k.regime == Regime::Super)
        v *= std::exp(-double(n) * std::log(k.R));
    return v;
}

/// Leading-order P(right-mover at 0 pairs with the left-mover at n), odd n;
/// nullopt in the supercritical regime where the amplitude is not explicit.
inline std::optional<double> asymptotic_right_pair(const Rational& p_exact, long n)
{
    if (n < 1 || n % 2 == 0)
        throw std::invalid_argument("asymptotic_right_pair needs odd n >= 1");
    check_open_unit(p_exact);
    const double p = to_double(p_exact), x = double(n);
    switch (regime_of(p_exact)) {
    case Regime::Sub: return std::sqrt(1 - 4 * p) / std::sqrt(2 * pi) * std::pow(x, -1.5);
    case Regime::Crit:
        return 1 / (std::cbrt(2.0) * static_cast<double>(gamma_constants::gamma_1_3)) * std::pow(x, -5.0 / 3);
    case Regime::Super: return std::nullopt;
    }
    return std::nullopt;
}

/// Sum of asymptotic_pA over odd n > N: a tail estimate for truncated sums.
inline double tail_pA(const Rational& p, long N)
{
    auto k = closed_forms(p);
    long m = N + 1; // first odd index above N
    if (m % 2 == 0)
        ++m;
    if (k.regime == Regime::Super) {
        double s = 0;
        for (long n = m;; n += 2) {
            double term = asymptotic_pA(p, n);
            s += term;
            if (term < s * 1e-17 || term == 0)
                break;
        }
        return s;
    }
    // odd-n sum of c n^e is (1/2) the integral from m-1 up to O(m^(e-2))
    const double e = k.pA_exponent;
    return 0.5 * k.pA_prefactor * std::pow(double(m - 1), e + 1) / (-(e + 1));
}

enum class DensityKind { C0, CPlus };

/// Leading-order density at time t (the limit for c0, and 0 for c+, when SUPER).
inline double density_asymptote(const Rational& p, double t, DensityKind which)
{
    if (!(t > 0))
        throw std::invalid_argument("density_asymptote needs t > 0");
    auto k = closed_forms(p);
    if (which == DensityKind::C0)
        return k.c0_const * std::pow(t, k.c0_exponent);
    return k.cplus_const * std::pow(t, k.cplus_exponent);
}

/// Leading-order equivalent of 2 c+(n) (even n) for constant unit spacing, SUPER.
inline double delta1_cplus_equivalent(const Rational& p_exact, long n)
{
    if (regime_of(p_exact) != Regime::Super)
        throw std::invalid_argument("delta1_cplus_equivalent is supercritical only");
    const double p = to_double(p_exact), sp = std::sqrt(p), R = growth_rate_R(p);
    return 9 * p / (2 * sp + 1) * std::sqrt(8 * (1 - p) * (8 * p + 1) / (pi * std::pow(4 * p - 1, 5)))
         * std::exp(-double(n + 1) * std::log(R)) * std::pow(double(n), -1.5);
}

/// F(z, w) = p z w^4 - (1+2p) z w^2 + 2w - (1-p) z.
inline std::complex<double> quartic_eval(std::complex<double> z, std::complex<double> w, const Rational& p_exact)
{
    const double p = to_double(p_exact);
    auto w2 = w * w;
    return p * z * w2 * w2 - (1 + 2 * p) * z * w2 + 2.0 * w - (1 - p) * z;
}

inline Rational quartic_eval_exact(const Rational& z, const Rational& w, const Rational& p)
{
    Rational w2 = w * w;
    return Rational(p * z * w2 * w2 - (1 + 2 * p) * z * w2 + 2 * w - (1 - p) * z);
}

/// dF/dw.
inline std::complex<double> quartic_dw(std::complex<double> z, std::complex<double> w, const Rational& p_exact)
{
    const double p = to_double(p_exact);
    return 4.0 * p * z * w * w * w - 2.0 * (1 + 2 * p) * z * w + 2.0;
}

/// The non-unity root -1 + sqrt(1/p - sigma) of the discrete-model equation for q.
inline double hat_q_from_sigma(const Rational& p, double sigma)
{
    check_open_unit(p);
    double rad = 1 / to_double(p) - sigma;
    if (rad < 0)
        throw std::invalid_argument("hat_q_from_sigma: negative radicand");
    return -1 + std::sqrt(rad);
}

} // namespace ballistic
