#include "ballistic/theory.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ballistic;

TEST(Theory, GammaLiteralsPassReflection)
{
    EXPECT_TRUE(gamma_constants::reflection_ok());
    EXPECT_NEAR(static_cast<double>(gamma_constants::gamma_1_3), std::tgamma(1.0 / 3), 1e-14);
    EXPECT_NEAR(static_cast<double>(gamma_constants::gamma_2_3), std::tgamma(2.0 / 3), 1e-14);
}

TEST(Theory, RegimeDispatchIsExact)
{
    EXPECT_EQ(regime_of(Rational(1, 4)), Regime::Crit);
    EXPECT_EQ(regime_of(parse_rational("0.25")), Regime::Crit);
    EXPECT_EQ(regime_of(Rational(1, 5)), Regime::Sub);
    EXPECT_EQ(regime_of(Rational(1, 4) + Rational(1, 1000000000)), Regime::Super);
    EXPECT_THROW(closed_forms(Rational(0)), std::invalid_argument);
    EXPECT_THROW(closed_forms(Rational(1)), std::invalid_argument);
}

TEST(Theory, SupercriticalHalf)
{
    auto k = closed_forms(Rational(1, 2));
    EXPECT_NEAR(k.q, std::sqrt(2.0) - 1, 1e-15);
    EXPECT_NEAR(k.q, 0.414214, 1e-6);
    EXPECT_NEAR(k.theta, 0.343146, 1e-6);
    EXPECT_NEAR(k.meanA_given_finite, 2.914214, 1e-6);
    // implicit differentiation of F(z, f(z)) = 0 at z = 1 gives f'(1) = q / ((1-q)(1 - 2pq - 2pq^2))
    const double q = k.q, p = 0.5;
    EXPECT_NEAR(k.meanA_from_quartic, 1 / ((1 - q) * (1 - 2 * p * q - 2 * p * q * q)), 1e-12);
    EXPECT_NEAR(k.R, 0.6 * std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(k.R, 1.039230, 1e-6);
    EXPECT_GT(k.R, 1);
}

TEST(Theory, CriticalQuarter)
{
    auto k = closed_forms(Rational(1, 4));
    EXPECT_EQ(k.q, 1);
    EXPECT_EQ(k.theta, 0);
    EXPECT_TRUE(std::isnan(k.R));
}

TEST(Theory, SkylineLaw)
{
    auto k = closed_forms(Rational(49, 100));
    EXPECT_NEAR(k.skyline_sigma_law[0], 0.49, 1e-15);
    EXPECT_NEAR(k.skyline_sigma_law[1], 0.21, 1e-15);
    EXPECT_NEAR(k.skyline_sigma_law[2], 0.21, 1e-15);
    EXPECT_NEAR(k.skyline_sigma_law[3], 0.09, 1e-15);
    for (int i = 1; i < 100; ++i) {
        auto s = closed_forms(ratio(i, 100)).skyline_sigma_law;
        EXPECT_NEAR(s[0] + s[1] + s[2] + s[3], 1.0, 1e-15);
    }
}

TEST(Theory, QContinuousAndThetaIdentity)
{
    for (int i = 1; i < 1000; ++i) {
        auto k = closed_forms(ratio(i, 1000));
        EXPECT_NEAR(k.theta, (1 - k.q) * (1 - k.q), 1e-14);
        EXPECT_GT(k.q, 0);
        EXPECT_LE(k.q, 1);
        if (k.regime == Regime::Super)
            EXPECT_GT(k.R, 1);
    }
    Rational eps(1, 1000000);
    EXPECT_NEAR(closed_forms(Rational(1, 4) + eps).q, 1.0, 1e-5);
}

TEST(Theory, PAPrefactors)
{
    const long n = 10001;
    EXPECT_NEAR(asymptotic_pA(Rational(1, 5), n) * std::pow(n, 1.5), 1.78412, 1e-5);
    // 2^{4/3} / (3 Gamma(2/3)) = 0.6202911...
    EXPECT_NEAR(asymptotic_pA(Rational(1, 4), n) * std::pow(n, 4.0 / 3), 0.620291, 1e-6);
    EXPECT_THROW(asymptotic_pA(Rational(1, 5), 10), std::invalid_argument);
    auto k = closed_forms(Rational(1, 2));
    EXPECT_NEAR(asymptotic_pA(Rational(1, 2), 101), k.C_p * std::pow(k.R, -101) * std::pow(101, -1.5), 1e-18);
}

TEST(Theory, DensityPrefactors)
{
    const double t = 200;
    EXPECT_NEAR(density_asymptote(Rational(1, 4), t, DensityKind::C0) * std::pow(t, 2.0 / 3), 0.216430, 2e-6);
    const double cplus_crit = std::cbrt(4.0) / (8 * std::pow(std::tgamma(2.0 / 3), 2)) + 3 / (8 * std::tgamma(1.0 / 3));
    EXPECT_NEAR(density_asymptote(Rational(1, 4), t, DensityKind::CPlus) * std::pow(t, 2.0 / 3), cplus_crit, 1e-12);
    EXPECT_NEAR(cplus_crit, 0.248197, 5e-6);
    EXPECT_NEAR(density_asymptote(Rational(1, 5), t, DensityKind::CPlus) * std::sqrt(t), 0.252313, 1e-6);
    EXPECT_NEAR(density_asymptote(Rational(1, 5), t, DensityKind::C0) * t, 0.4 / (M_PI * 0.2), 1e-12);
    EXPECT_NEAR(density_asymptote(Rational(9, 25), t, DensityKind::C0), 1.0 / 25, 1e-15);
    EXPECT_EQ(density_asymptote(Rational(9, 25), t, DensityKind::CPlus), 0);
    EXPECT_THROW(density_asymptote(Rational(1, 5), 0, DensityKind::C0), std::invalid_argument);
}

TEST(Theory, QuarticRoots)
{
    using C = std::complex<double>;
    Rational half(1, 2);
    EXPECT_LT(std::abs(quartic_eval(C(1), C(std::sqrt(2.0) - 1), half)), 1e-12);
    for (int i = 1; i < 100; ++i)
        EXPECT_EQ(quartic_eval_exact(1, 1, ratio(i, 100)), 0);
    const double R = closed_forms(half).R;
    const C w(std::sqrt((1 - 0.5) / (3 * 0.5)));
    EXPECT_LT(std::abs(quartic_eval(C(R), w, half)), 1e-10);
    EXPECT_LT(std::abs(quartic_dw(C(R), w, half)), 1e-10);
}

TEST(Theory, HatQ)
{
    EXPECT_NEAR(hat_q_from_sigma(Rational(1, 2), 0), std::sqrt(2.0) - 1, 1e-15);
    EXPECT_EQ(hat_q_from_sigma(Rational(1, 4), 0), 1);
    EXPECT_THROW(hat_q_from_sigma(Rational(1, 2), 3), std::invalid_argument);
}

TEST(Theory, TailEstimate)
{
    // sum over odd n > N of c n^{-3/2}, brute force against the midpoint formula
    Rational p(1, 5);
    const double c = closed_forms(p).pA_prefactor;
    double brute = 0;
    for (long n = 1001; n < 50000001; n += 2)
        brute += c * std::pow(double(n), -1.5);
    brute += c * std::pow(50000000.0, -0.5); // remaining integral
    EXPECT_NEAR(tail_pA(p, 1000) / brute, 1.0, 1e-5);
}
