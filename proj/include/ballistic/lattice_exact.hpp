#pragma once

#include "ballistic/engine.hpp"
#include "ballistic/poly.hpp"
#include "ballistic/reference.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace ballistic {

/// Thrown when a request exceeds a size cap; `achieved` is the largest order
/// that fits.
struct ResourceCapExceeded : std::runtime_error {
    long achieved;
    ResourceCapExceeded(const std::string& what, long achieved_)
        : std::runtime_error(what), achieved(achieved_) {}
};

/// P(A = k), 1 <= k <= achieved, as polynomials in p for unit spacing.
struct LatticeLaw {
    CollisionRule rule = CollisionRule::Spin;
    long requested = 0;
    long achieved = 0;
    std::vector<PolyRat> pA; // index 0 unused

    bool partial() const { return achieved < requested; }
};

inline constexpr long lattice_k_cap = 160;
inline constexpr int bruteforce_k_cap = 11;

/// First-passage decomposition on the unit lattice, where D = A so every
/// distance comparison becomes an index comparison. With a = j-1 and b = k-j
/// for a right-mover at 1 meeting a static at j first reached from the right by
/// the left-mover at k, the tie a = b is a triple collision: SPIN keeps half of
/// it in the "right-mover hits a static" term, MUTUAL moves it to a separate
/// triple term tau that is then removed from delta and fed into the law like gamma.
///   alpha_n = p sum_{a+b=n-1} P_a P_b
///   beta_n  = p sum_{a<b} P_a P_b (+ p/2 sum_{a=b} under SPIN)
///   tau_n   = p sum_{a=b} P_a P_b under MUTUAL, else 0
///   delta_n = pbar P_{n-1} - sum_k (beta_k + tau_k) P_{n-k}
///   P_n     = alpha_n + beta_n + sum_k (delta_k + tau_k) P_{n-k}
namespace detail {

inline bool is_zero(const PolyRat& x) { return x.is_zero(); }
inline bool is_zero(double x) { return x == 0; }
inline PolyRat half(const PolyRat& x) { return x * Rational(1, 2); }
inline double half(double x) { return x / 2; }

template <class T>
std::vector<T> first_passage_law(CollisionRule rule, long K, const T& p, const T& pbar)
{
    const auto sz = static_cast<std::size_t>(K + 1);
    std::vector<T> P(sz, T{}), beta(sz, T{}), tau(sz, T{}), delta(sz, T{});
    P[1] = pbar;
    for (long n = 2; n <= K; ++n) {
        const auto nn = static_cast<std::size_t>(n);
        T alpha{}, below{}, tie{};
        for (long a = 1; a < n - 1; ++a) {
            const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(n - 1 - a);
            if (is_zero(P[ia]) || is_zero(P[ib]))
                continue;
            T term = P[ia] * P[ib];
            alpha += term;
            if (ia < ib)
                below += term;
            else if (ia == ib)
                tie += term;
        }
        alpha = p * alpha;
        if (rule == CollisionRule::Spin) {
            beta[nn] = p * (below + half(tie));
        } else {
            beta[nn] = p * below;
            tau[nn] = p * tie;
        }
        T absorbed{}, after{};
        for (long k = 2; k < n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const T& rest = P[static_cast<std::size_t>(n - k)];
            if (is_zero(rest))
                continue;
            absorbed += (beta[kk] + tau[kk]) * rest;
            after += (delta[kk] + tau[kk]) * rest;
        }
        delta[nn] = pbar * P[nn - 1] - absorbed;
        P[nn] = alpha + beta[nn] + after;
    }
    return P;
}

} // namespace detail

inline LatticeLaw law_A_delta1(CollisionRule rule, long k_max, long cap = lattice_k_cap)
{
    if (k_max < 1)
        throw std::invalid_argument("law_A_delta1 needs k_max >= 1");
    LatticeLaw out;
    out.rule = rule;
    out.requested = k_max;
    out.achieved = std::min(k_max, cap);
    out.pA = detail::first_passage_law<PolyRat>(rule, out.achieved, PolyRat::p(), PolyRat::pbar());
    return out;
}

/// The same recursion at a fixed p in binary64, for long tails (index 0 unused).
inline std::vector<double> law_A_delta1_values(CollisionRule rule, double p, long K)
{
    if (!(p > 0 && p < 1) || K < 1)
        throw std::invalid_argument("law_A_delta1_values needs 0 < p < 1 and K >= 1");
    return detail::first_passage_law<double>(rule, K, p, (1 - p) / 2);
}

/// Oracle: sums p^#static ((1-p)/2)^#movers 2^-#static over every velocity word
/// and spin assignment of k unit-spaced particles whose first crossing is k.
inline LatticeLaw law_A_delta1_bruteforce(CollisionRule rule, int k_max)
{
    if (k_max < 1)
        throw std::invalid_argument("law_A_delta1_bruteforce needs k_max >= 1");
    if (k_max > bruteforce_k_cap)
        throw ResourceCapExceeded("brute-force enumeration is capped at k = " + std::to_string(bruteforce_k_cap),
                                  bruteforce_k_cap);
    LatticeLaw out;
    out.rule = rule;
    out.requested = out.achieved = k_max;
    out.pA.resize(static_cast<std::size_t>(k_max + 1));
    for (int k = 1; k <= k_max; ++k) {
        // count[j] = number of (word, spins) with j statics and A = k
        std::vector<long> count(static_cast<std::size_t>(k + 1), 0);
        for_each_lattice_config(k, [&](const Configuration<std::int64_t>& c) {
            auto fc = first_crossing(c, rule);
            if (fc && fc->first == k) {
                std::size_t j = 0;
                for (const auto& q : c.particles)
                    j += q.v == Velocity::Static;
                ++count[j];
            }
        });
        PolyRat sum;
        for (int j = 0; j <= k; ++j)
            if (count[static_cast<std::size_t>(j)])
                sum += PolyRat::p().pow(static_cast<unsigned>(j)) * PolyRat::pbar().pow(static_cast<unsigned>(k - j))
                     * ratio(count[static_cast<std::size_t>(j)], 1L << j);
        out.pA[static_cast<std::size_t>(k)] = sum;
    }
    return out;
}

struct SigmaPolys {
    long K = 0;
    PolyRat sigma;       // sum_{k<=K} P(A=k)^2, MUTUAL
    PolyRat sigma_tilde; // sum_{k<=K} P(A=k)
};

inline SigmaPolys sigma_polys(long K, long cap = lattice_k_cap)
{
    if (K > cap)
        throw ResourceCapExceeded("sigma_polys: K above the cap of " + std::to_string(cap), cap);
    auto law = law_A_delta1(CollisionRule::Mutual, K, cap);
    SigmaPolys s;
    s.K = K;
    for (long k = 1; k <= K; ++k) {
        const auto& a = law.pA[static_cast<std::size_t>(k)];
        s.sigma += a * a;
        s.sigma_tilde += a;
    }
    return s;
}

struct RootInterval {
    Rational lo, hi;
    double width() const { return to_double(Rational(hi - lo)); }
    double mid() const { return to_double(Rational((lo + hi) / 2)); }
};

struct CriticalBounds {
    long K = 0;
    RootInterval r_minus, r_plus;
    PolyRat extinction, survival; // p(5 + s - 2t + t^2) - 1 and p(4 + s) - 1
};

namespace detail {

/// Smallest (or largest) root of f in (0, 1), bracketed by Sturm counts so the
/// answer is certified even at a root of even multiplicity.
inline RootInterval isolate_extreme_root(const PolyRat& f, bool smallest, const Rational& tol)
{
    const auto chain = sturm_chain(f);
    const Rational zero(0), one(1);
    if (f.sign_at(zero) == 0)
        throw std::runtime_error("critical_bounds: polynomial vanishes at 0");
    const int total = count_roots(chain, zero, one) - (f.sign_at(one) == 0 ? 1 : 0);
    if (total <= 0)
        throw std::runtime_error("critical_bounds: no root in (0,1)");
    // invariant: the wanted root lies in (lo, hi]
    Rational lo = zero, hi = one;
    while (Rational(hi - lo) > tol) {
        Rational mid = (lo + hi) / 2;
        if (f.sign_at(mid) == 0) {
            const int left = count_roots(chain, zero, mid);
            const bool wanted = smallest ? left == 1 : left == total;
            if (wanted)
                return {mid, mid};
            if (smallest)
                hi = mid; // a smaller root exists in (lo, mid)
            else
                lo = mid;
            continue;
        }
        const int left = count_roots(chain, zero, mid);
        if (smallest ? left >= 1 : left == total)
            hi = mid;
        else
            lo = mid;
    }
    return {lo, hi};
}

} // namespace detail

inline CriticalBounds critical_bounds(const SigmaPolys& s, double tol)
{
    if (!(tol > 0))
        throw std::invalid_argument("critical_bounds needs tol > 0");
    CriticalBounds b;
    b.K = s.K;
    const PolyRat p = PolyRat::p();
    b.extinction = p * (PolyRat(Rational(5)) + s.sigma - s.sigma_tilde * Rational(2) + s.sigma_tilde * s.sigma_tilde)
                 - PolyRat(Rational(1));
    b.survival = p * (PolyRat(Rational(4)) + s.sigma) - PolyRat(Rational(1));
    const Rational t(tol);
    b.r_minus = detail::isolate_extreme_root(b.extinction, true, t);
    b.r_plus = detail::isolate_extreme_root(b.survival, false, t);
    return b;
}

inline CriticalBounds critical_bounds(long K, double tol, long cap = lattice_k_cap)
{
    return critical_bounds(sigma_polys(K, cap), tol);
}

/// E[#surviving statics - #surviving left-movers] among k unit-spaced particles,
/// by enumeration of all velocity words and static spins.
inline PolyRat expected_Nk_delta1(CollisionRule rule, int k)
{
    if (k < 1)
        throw std::invalid_argument("expected_Nk_delta1 needs k >= 1");
    if (k > bruteforce_k_cap)
        throw ResourceCapExceeded("expected_Nk_delta1 enumerates and is capped at k = " + std::to_string(bruteforce_k_cap),
                                  bruteforce_k_cap);
    // total[j] = sum of N_k over (word, spins) with j statics
    std::vector<long> total(static_cast<std::size_t>(k + 1), 0);
    for_each_lattice_config(k, [&](const Configuration<std::int64_t>& c) {
        auto r = resolve(c, rule, {false});
        long nk = 0;
        for (const auto& [index, v] : r.survivors())
            nk += v == Velocity::Static ? 1 : v == Velocity::Left ? -1 : 0;
        std::size_t j = 0;
        for (const auto& q : c.particles)
            j += q.v == Velocity::Static;
        total[j] += nk;
    });
    PolyRat sum;
    for (int j = 0; j <= k; ++j)
        if (total[static_cast<std::size_t>(j)])
            sum += PolyRat::p().pow(static_cast<unsigned>(j)) * PolyRat::pbar().pow(static_cast<unsigned>(k - j))
                 * ratio(total[static_cast<std::size_t>(j)], 1L << j);
    return sum;
}

/// Smallest root of a polynomial in (0, 1), certified to width tol.
inline RootInterval smallest_root_in_unit(const PolyRat& f, double tol)
{
    return detail::isolate_extreme_root(f, true, Rational(tol));
}

} // namespace ballistic
