#pragma once

#include "ballistic/theory.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace ballistic {

enum class Backend { Exact, Float };

/// P(A = n) and its four components for a fixed p, 1 <= n <= N (index 0 unused).
/// p_n, alpha_n, beta_n, gamma_n vanish for even n; delta_n vanishes for odd n.
template <class T>
struct SeriesTable {
    Rational p;
    long N = 0;
    std::vector<T> pn, alpha, beta, gamma, delta;

    static constexpr Backend backend = std::is_same_v<T, Rational> ? Backend::Exact : Backend::Float;
};

namespace detail {

template <class T>
T from_rational(const Rational& r)
{
    if constexpr (std::is_same_v<T, Rational>)
        return r;
    else
        return static_cast<T>(r.get_d());
}

/// sum_{a=lo}^{hi} x[a] * y[s - a]
template <class T>
T convolve(const std::vector<T>& x, const std::vector<T>& y, long lo, long hi, long s)
{
    if constexpr (std::is_same_v<T, Rational>) {
        Rational acc = 0;
        for (long a = lo; a <= hi; ++a)
            acc += x[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(s - a)];
        return acc;
    } else {
        // plain blocks vectorise; block totals go through Neumaier summation
        T sum = 0, comp = 0;
        constexpr long block = 64;
        for (long b = lo; b <= hi; b += block) {
            const long e = std::min(hi, b + block - 1);
            T part = 0;
            for (long a = b; a <= e; ++a)
                part += x[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(s - a)];
            T t = sum + part;
            comp += std::fabs(sum) >= std::fabs(part) ? (sum - t) + part : (part - t) + sum;
            sum = t;
        }
        return sum + comp;
    }
}

} // namespace detail

/// Runs the four recurrences from p_1 = (1-p)/2. Internally the odd and even
/// subsequences are stored compactly: P[m] = p_{2m+1}, B[m] = beta_{2m+1},
/// D[m] = delta_{2m}.
template <class T>
SeriesTable<T> build_series(const Rational& p_exact, long N)
{
    if (p_exact <= 0 || p_exact >= 1)
        throw std::invalid_argument("build_series needs 0 < p < 1");
    if (N < 1)
        throw std::invalid_argument("build_series needs N >= 1");
    const T p = detail::from_rational<T>(p_exact);
    const T pbar = detail::from_rational<T>(Rational((1 - p_exact) / 2));

    const long M = N / 2; // odd indices 1..2M+1 <= N+1
    std::vector<T> P(static_cast<std::size_t>(M + 1), T(0)), A(P.size(), T(0)), B(P.size(), T(0)),
        G(P.size(), T(0)), D(P.size() + 1, T(0));
    P[0] = pbar;
    for (long m = 1; 2 * m <= N; ++m) {
        // delta_{2m} = pbar p_{2m-1} - sum_{b=1}^{m-1} beta_{2b+1} p_{2m-2b-1}
        D[static_cast<std::size_t>(m)] = pbar * P[static_cast<std::size_t>(m - 1)] - detail::convolve(B, P, 1, m - 1, m - 1);
        if (2 * m + 1 > N)
            break;
        const auto mm = static_cast<std::size_t>(m);
        // alpha_{2m+1} = p sum_{a=1}^{m} p_{2a-1} p_{2m+1-2a}
        A[mm] = p * detail::convolve(P, P, 0, m - 1, m - 1);
        B[mm] = A[mm] / T(2);
        // gamma_{2m+1} = sum_{a=1}^{m} delta_{2a} p_{2m+1-2a}
        G[mm] = detail::convolve(D, P, 1, m, m);
        P[mm] = A[mm] + B[mm] + G[mm];
        if constexpr (std::is_same_v<T, Rational>) {
            B[mm].canonicalize();
            P[mm].canonicalize();
        }
    }

    SeriesTable<T> t;
    t.p = p_exact;
    t.N = N;
    const auto size = static_cast<std::size_t>(N + 1);
    t.pn.assign(size, T(0));
    t.alpha.assign(size, T(0));
    t.beta.assign(size, T(0));
    t.gamma.assign(size, T(0));
    t.delta.assign(size, T(0));
    for (long n = 1; n <= N; ++n) {
        const auto m = static_cast<std::size_t>(n / 2);
        const auto i = static_cast<std::size_t>(n);
        if (n % 2) {
            t.pn[i] = P[m];
            t.alpha[i] = A[m];
            t.beta[i] = B[m];
            t.gamma[i] = G[m];
        } else {
            t.delta[i] = D[m];
        }
    }
    return t;
}

/// Smallest order k <= N where p x f^4 - (1+2p) x f^2 + 2 f - (1-p) x has a
/// nonzero coefficient, f = sum_{n<=N} p_n x^n; nullopt means clean up to N.
inline std::optional<long> quartic_residual(const SeriesTable<Rational>& t)
{
    const auto size = static_cast<std::size_t>(t.N + 1);
    auto truncated_product = [&](const std::vector<Rational>& a, const std::vector<Rational>& b) {
        std::vector<Rational> c(size, Rational(0));
        for (std::size_t i = 0; i < size; ++i) {
            if (a[i] == 0)
                continue;
            for (std::size_t j = 0; i + j < size; ++j)
                if (b[j] != 0)
                    c[i + j] += a[i] * b[j];
        }
        return c;
    };
    auto f2 = truncated_product(t.pn, t.pn);
    auto f4 = truncated_product(f2, f2);
    for (std::size_t k = 1; k < size; ++k) {
        Rational c = t.p * f4[k - 1] - (1 + 2 * t.p) * f2[k - 1] + 2 * t.pn[k];
        if (k == 1)
            c -= 1 - t.p;
        if (c != 0)
            return static_cast<long>(k);
    }
    return std::nullopt;
}

inline std::optional<long> quartic_residual(const SeriesTable<double>&)
{
    throw std::invalid_argument("quartic_residual needs the exact backend");
}

struct LawSummary {
    double partial_sum = 0;
    double partial_mean = 0;     // sum n p_n
    double tail_asymptotic = 0;  // sum_{n>N} of the leading-order P(A=n)
    double tail_bound_hint = 0;  // the same, rescaled by p_M / leading-order(M) at the last odd M <= N
    Regime regime = Regime::Sub;
};

template <class T>
LawSummary law_summaries(const SeriesTable<T>& t)
{
    T s = 0, m = 0;
    for (long n = 1; n <= t.N; ++n) {
        s += t.pn[static_cast<std::size_t>(n)];
        m += T(n) * t.pn[static_cast<std::size_t>(n)];
    }
    LawSummary out;
    if constexpr (std::is_same_v<T, Rational>) {
        out.partial_sum = s.get_d();
        out.partial_mean = m.get_d();
    } else {
        out.partial_sum = s;
        out.partial_mean = m;
    }
    out.tail_asymptotic = tail_pA(t.p, t.N);
    out.tail_bound_hint = out.tail_asymptotic;
    const long last = t.N % 2 ? t.N : t.N - 1;
    if (last >= 1) {
        const double pl = detail::from_rational<double>(Rational(t.pn[static_cast<std::size_t>(last)]));
        const double al = asymptotic_pA(t.p, last);
        if (pl > 0 && al > 0)
            out.tail_bound_hint *= pl / al;
    }
    out.regime = regime_of(t.p);
    return out;
}

/// Static and right-mover densities at integer time n for unit spacing:
///   c0 = p (1 - S_n)^2,  S_n = sum_{k<=n} p_k,
///   c+ = sum_{k>n} p (p_k (1 - S_k) + p_k^2 / 2) + sum_{k>2n} delta_{k+1}.
/// Both infinite sums are evaluated in closed form: the first telescopes to
/// p ((1 - S_n)^2 - (1 - q)^2) / 2, and sum_k delta_k = (1-p)/2 - p q (1-q) - p q^2 / 2.
struct Delta1Densities {
    double c0 = 0;
    double c_plus = 0;
    double c_plus_truncated = 0; // the two sums cut at N
    double truncation_bound = 0; // c_plus - c_plus_truncated
    std::optional<Rational> c0_exact, c_plus_exact; // when q is rational
};

template <class T>
Delta1Densities delta1_densities(const SeriesTable<T>& t, long n)
{
    if (n < 0 || 2 * n + 2 > t.N)
        throw std::invalid_argument("delta1_densities needs 0 <= n and 2n + 2 <= N");

    auto k = closed_forms(t.p);
    // exact q when sqrt(p) is rational
    std::optional<Rational> q_exact;
    if (k.regime != Regime::Super) {
        q_exact = Rational(1);
    } else {
        bool exact = false;
        Rational sp = rational_sqrt_exact(t.p, exact);
        if (exact)
            q_exact = Rational(1 / sp - 1);
    }

    T S = 0;
    for (long j = 1; j <= n; ++j)
        S += t.pn[static_cast<std::size_t>(j)];
    const T p = detail::from_rational<T>(t.p);
    const T c0 = p * (T(1) - S) * (T(1) - S);

    T first_trunc = 0, Sk = S;
    for (long j = n + 1; j <= t.N; ++j) {
        const T pk = t.pn[static_cast<std::size_t>(j)];
        Sk += pk;
        first_trunc += p * (pk * (T(1) - Sk) + pk * pk / T(2));
    }
    T delta_head = 0, delta_trunc = 0;
    for (long j = 1; j <= t.N; ++j) {
        if (j <= 2 * n + 1)
            delta_head += t.delta[static_cast<std::size_t>(j)];
        else
            delta_trunc += t.delta[static_cast<std::size_t>(j)];
    }

    Delta1Densities out;
    auto as_double = [](const T& v) {
        if constexpr (std::is_same_v<T, Rational>)
            return v.get_d();
        else
            return double(v);
    };
    out.c0 = as_double(c0);
    out.c_plus_truncated = as_double(first_trunc + delta_trunc);

    if constexpr (std::is_same_v<T, Rational>) {
        out.c0_exact = c0;
        if (q_exact) {
            const Rational& q = *q_exact;
            Rational first = t.p * ((1 - S) * (1 - S) - (1 - q) * (1 - q)) / 2;
            Rational delta_total = (1 - t.p) / 2 - t.p * q * (1 - q) - t.p * q * q / 2;
            Rational cp = first + delta_total - delta_head;
            cp.canonicalize();
            out.c_plus_exact = cp;
            out.c_plus = cp.get_d();
        }
    }
    if (!out.c_plus_exact) {
        const double q = k.q, sd = as_double(S), pd = to_double(t.p);
        const double first = pd * ((1 - sd) * (1 - sd) - (1 - q) * (1 - q)) / 2;
        const double delta_total = (1 - pd) / 2 - pd * q * (1 - q) - pd * q * q / 2;
        out.c_plus = first + delta_total - as_double(delta_head);
    }
    out.truncation_bound = out.c_plus - out.c_plus_truncated;
    return out;
}

namespace detail {

inline std::string csv_cell(const Rational& r) { return to_string(r); }

inline std::string csv_cell(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Columns n, p_n, alpha_n, beta_n, gamma_n, delta_n.
template <class T>
void write_csv(std::ostream& os, const SeriesTable<T>& t)
{
    os << "n,p_n,alpha_n,beta_n,gamma_n,delta_n\n";
    for (long n = 1; n <= t.N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        os << n << ',' << detail::csv_cell(t.pn[i]) << ',' << detail::csv_cell(t.alpha[i]) << ','
           << detail::csv_cell(t.beta[i]) << ',' << detail::csv_cell(t.gamma[i]) << ',' << detail::csv_cell(t.delta[i])
           << '\n';
    }
}

} // namespace ballistic
