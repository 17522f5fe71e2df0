#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ballistic {

/// A Monte Carlo point estimate. `bias_bound` bounds the systematic error from
/// finite windows or censoring; comparisons use 3 * std_err + bias_bound.
struct Estimate {
    double point = 0;
    double std_err = 0;
    long n_replicas = 0;
    double censored_fraction = 0;
    double bias_bound = 0;

    std::pair<double, double> ci95() const { return {point - 1.96 * std_err, point + 1.96 * std_err}; }

    /// |point - target| <= k std_err + bias_bound.
    bool agrees(double target, double k = 3) const { return std::fabs(point - target) <= k * std_err + bias_bound; }

    /// Signed distance to the target in units of std_err, after giving away bias_bound.
    double z(double target) const
    {
        double d = std::fabs(point - target) - bias_bound;
        if (d <= 0)
            return 0;
        return std_err > 0 ? d / std_err : INFINITY;
    }
};

/// Mean of per-replica values with the sample standard error.
inline Estimate mean_estimate(const std::vector<double>& xs)
{
    Estimate e;
    e.n_replicas = static_cast<long>(xs.size());
    if (xs.empty())
        return e;
    double s = 0;
    for (double x : xs)
        s += x;
    e.point = s / double(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs)
            ss += (x - e.point) * (x - e.point);
        e.std_err = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    }
    return e;
}

/// Binomial proportion. A zero (or full) count gets std_err 1/n rather than 0,
/// so an empty tally still has a finite resolution.
inline Estimate proportion(long hits, long n)
{
    if (n <= 0)
        throw std::invalid_argument("proportion needs n > 0");
    Estimate e;
    e.n_replicas = n;
    e.point = double(hits) / double(n);
    e.std_err = std::sqrt(e.point * (1 - e.point) / double(n));
    if (hits == 0 || hits == n)
        e.std_err = 1.0 / double(n);
    return e;
}

/// Ratio sum(x) / sum(w) over replicas, with the linearised standard error.
inline Estimate ratio_estimate(const std::vector<double>& x, const std::vector<double>& w)
{
    if (x.size() != w.size() || x.empty())
        throw std::invalid_argument("ratio_estimate needs matching nonempty inputs");
    double sx = 0, sw = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sw += w[i];
    }
    Estimate e;
    e.n_replicas = static_cast<long>(x.size());
    e.point = sx / sw;
    const double R = double(x.size()), wbar = sw / R;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        ss += (x[i] - e.point * w[i]) * (x[i] - e.point * w[i]);
    e.std_err = x.size() > 1 ? std::sqrt(ss / (R - 1) / R) / wbar : 0;
    if (sx == 0)
        e.std_err = std::max(e.std_err, 1.0 / sw);
    return e;
}

struct ChiSquare {
    double statistic = 0;
    int dof = 0;
    double p_value = 1;
    std::size_t bins_used = 0;

    bool passes(double alpha) const { return p_value >= alpha; }
};

inline double chi2_sf(double x, int dof)
{
    if (dof < 1)
        return 1;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

/// Goodness of fit of counts against probabilities. Bins are visited in order
/// and merged until the expected count reaches min_expected; any probability
/// mass not listed forms one more bin against the uncounted observations.
inline ChiSquare chi2_goodness(const std::vector<long>& observed, const std::vector<double>& prob, long total,
                               double min_expected = 5)
{
    if (observed.size() != prob.size())
        throw std::invalid_argument("chi2_goodness: size mismatch");
    std::vector<std::pair<double, double>> bins; // (observed, expected)
    double o = 0, e = 0, seen_o = 0, seen_p = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o += double(observed[i]);
        e += prob[i] * double(total);
        seen_o += double(observed[i]);
        seen_p += prob[i];
        if (e >= min_expected) {
            bins.emplace_back(o, e);
            o = e = 0;
        }
    }
    o += double(total) - seen_o;
    e += std::max(0.0, 1 - seen_p) * double(total);
    if (e >= min_expected || bins.empty())
        bins.emplace_back(o, e);
    else {
        bins.back().first += o;
        bins.back().second += e;
    }
    ChiSquare c;
    for (auto [ob, ex] : bins)
        if (ex > 0)
            c.statistic += (ob - ex) * (ob - ex) / ex;
    c.bins_used = bins.size();
    c.dof = static_cast<int>(bins.size()) - 1;
    c.p_value = chi2_sf(c.statistic, c.dof);
    return c;
}

/// Two-sample homogeneity test on aligned histograms; bins are merged in order
/// until the pooled count reaches min_pooled.
inline ChiSquare chi2_two_sample(const std::vector<long>& a, const std::vector<long>& b, double min_pooled = 10)
{
    if (a.size() != b.size())
        throw std::invalid_argument("chi2_two_sample: size mismatch");
    double na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += double(a[i]);
        nb += double(b[i]);
    }
    if (na == 0 || nb == 0)
        throw std::invalid_argument("chi2_two_sample: empty sample");
    std::vector<std::pair<double, double>> bins;
    double x = 0, y = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        x += double(a[i]);
        y += double(b[i]);
        if (x + y >= min_pooled) {
            bins.emplace_back(x, y);
            x = y = 0;
        }
    }
    if (x + y > 0) {
        if (bins.empty())
            bins.emplace_back(x, y);
        else {
            bins.back().first += x;
            bins.back().second += y;
        }
    }
    ChiSquare c;
    const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
    for (auto [u, v] : bins)
        c.statistic += (ka * u - kb * v) * (ka * u - kb * v) / (u + v);
    c.bins_used = bins.size();
    c.dof = static_cast<int>(bins.size()) - 1;
    c.p_value = chi2_sf(c.statistic, c.dof);
    return c;
}

/// Lag-1 Pearson correlation of a sequence of numbers; under independence
/// it is approximately normal with standard error 1/sqrt(n).
inline Estimate lag1_correlation(const std::vector<std::vector<double>>& runs)
{
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    long n = 0;
    for (const auto& r : runs)
        for (std::size_t i = 1; i < r.size(); ++i) {
            sx += r[i - 1];
            sy += r[i];
            sxx += r[i - 1] * r[i - 1];
            syy += r[i] * r[i];
            sxy += r[i - 1] * r[i];
            ++n;
        }
    Estimate e;
    e.n_replicas = n;
    if (n < 3)
        return e;
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n), vy = syy / n - (sy / n) * (sy / n);
    e.point = vx > 0 && vy > 0 ? cov / std::sqrt(vx * vy) : 0;
    e.std_err = 1 / std::sqrt(double(n));
    return e;
}

} // namespace ballistic
