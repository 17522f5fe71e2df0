#pragma once

#include "ballistic/engine.hpp"
#include "ballistic/exact_series.hpp"
#include "ballistic/lattice_exact.hpp"
#include "ballistic/skyline.hpp"
#include "ballistic/stats.hpp"
#include "ballistic/theory.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <vector>

namespace ballistic {

struct ExperimentPlan {
    InterdistanceSpec spec = InterdistanceSpec::delta1();
    ModelParams params;
    long n = 2000;          // half-line particles, or particles per side for full-line windows
    long replicas = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    long safety_margin = 200; // skyline: indices kept clear of the window edge
    double core = 200;        // densities: half-width of the measured region, in length units
};

/// Runs f(r) for r in [0, R) on `threads` workers; results are indexed by r,
/// so every reduction over them is independent of the thread count.
template <class T, class F>
std::vector<T> replica_map(long R, unsigned threads, F&& f)
{
    std::vector<T> out(static_cast<std::size_t>(std::max(0L, R)));
    if (R <= 0)
        return out;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<long>(R, 1024))));
    if (threads == 1) {
        for (long r = 0; r < R; ++r)
            out[static_cast<std::size_t>(r)] = f(r);
        return out;
    }
    std::atomic<long> next{0};
    constexpr long chunk = 16;
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            try {
                for (;;) {
                    long b = next.fetch_add(chunk);
                    if (b >= R || failed)
                        return;
                    for (long r = b; r < std::min(R, b + chunk); ++r)
                        out[static_cast<std::size_t>(r)] = f(r);
                }
            } catch (...) {
                if (!failed.exchange(true))
                    error = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
    return out;
}

/// Calls f with a value of the coordinate type suited to the spacing law.
template <class F>
decltype(auto) with_coord(const InterdistanceSpec& spec, F&& f)
{
    if (spec.is_continuous())
        return f(Tick{});
    return f(std::int64_t{});
}

// ---------------------------------------------------------------------------
// Half-line replicas

struct HalfLineOutcome {
    long A = 0; // 0 when no crossing within the window
    Velocity v1 = Velocity::Static;
    std::optional<Velocity> partner_of_1; // velocity of the particle 1 paired with, if any
    bool fate1_certified = false;         // the fate of particle 1 cannot change beyond the window
};

namespace detail {

template <class Coord>
Configuration<Coord> prefix(const Configuration<Coord>& c, std::size_t m)
{
    Configuration<Coord> out;
    out.unit = c.unit;
    out.origin = c.origin;
    out.provenance = c.provenance;
    out.particles.assign(c.particles.begin(), c.particles.begin() + static_cast<std::ptrdiff_t>(m));
    return out;
}

template <class Coord>
HalfLineOutcome classify_half_line(const ResolutionResult<Coord>& r, const Configuration<Coord>& c)
{
    HalfLineOutcome o;
    if (auto x = r.crossing_record())
        o.A = x->first;
    o.v1 = c.particles.front().v;
    const auto& f = r.fates.front();
    if (!f.alive && f.partner >= 0)
        o.partner_of_1 = c.particles[static_cast<std::size_t>(f.partner)].v;
    if (o.A != 0) {
        o.fate1_certified = true; // everything left of a crossing particle is settled before it passes
    } else if (!f.alive) {
        // nothing from beyond x_last reaches the death location by the death time
        const Coord last2 = c.particles.back().x + c.particles.back().x;
        o.fate1_certified = last2 - f.loc2 > f.time2;
    }
    return o;
}

} // namespace detail

/// Resolves growing prefixes (x4 each step) and stops at the first crossing,
/// which is final; the answer equals resolving the whole configuration.
template <class Coord>
HalfLineOutcome resolve_half_line_incremental(const Configuration<Coord>& c, CollisionRule rule, std::size_t start = 64)
{
    std::size_t m = std::min(start, c.size());
    for (;;) {
        if (m == c.size()) {
            auto r = resolve(c, rule, {false});
            return detail::classify_half_line(r, c);
        }
        auto pre = detail::prefix(c, m);
        auto r = resolve(pre, rule, {false});
        if (r.first_left_crossing)
            return detail::classify_half_line(r, pre);
        m = std::min(c.size(), m * 4);
    }
}

inline std::vector<HalfLineOutcome> sample_half_lines(const ExperimentPlan& plan)
{
    plan.params.validate();
    return with_coord(plan.spec, [&](auto tag) {
        using Coord = decltype(tag);
        return replica_map<HalfLineOutcome>(plan.replicas, plan.threads, [&](long r) {
            auto c = sample_config<Coord>(plan.n, plan.spec, plan.params, replica_seed(plan.seed, static_cast<std::uint64_t>(r)));
            return resolve_half_line_incremental(c, plan.params.rule);
        });
    });
}

/// P(n < A < infinity): exact series under SPIN (q in closed form minus the
/// partial sum), or the lattice recursion summed to 4n under MUTUAL with unit
/// spacing (a lower estimate of the tail, reported as a hint).
inline double crossing_tail(const InterdistanceSpec& spec, const ModelParams& params, long n)
{
    const bool mutual_lattice = params.rule == CollisionRule::Mutual && !spec.is_continuous();
    if (params.p <= 0 || params.p >= 1)
        return 0;
    if (mutual_lattice) {
        if (!spec.is_delta1())
            throw std::invalid_argument("MUTUAL tails are only available for unit spacing");
        const long K = std::min(4 * n, 40000L);
        auto v = law_A_delta1_values(CollisionRule::Mutual, to_double(params.p), K);
        double t = 0;
        for (long k = n + 1; k <= K; ++k)
            t += v[static_cast<std::size_t>(k)];
        return t;
    }
    auto table = build_series<double>(params.p, n);
    double s = 0;
    for (long k = 1; k <= n; ++k)
        s += table.pn[static_cast<std::size_t>(k)];
    return std::max(0.0, closed_forms(params.p).q - s);
}

struct QEstimate {
    Estimate q;
    double tail = 0; // P(n < A < infinity), the downward bias of q
};

inline QEstimate q_from_outcomes(const std::vector<HalfLineOutcome>& out, const ExperimentPlan& plan)
{
    long hits = 0;
    for (const auto& o : out)
        hits += o.A != 0;
    QEstimate e;
    e.q = proportion(hits, static_cast<long>(out.size()));
    e.q.censored_fraction = 1 - e.q.point;
    e.tail = crossing_tail(plan.spec, plan.params, plan.n);
    e.q.bias_bound = e.tail;
    return e;
}

/// Fraction of half-line windows in which some particle reaches the origin.
inline QEstimate estimate_q(const ExperimentPlan& plan) { return q_from_outcomes(sample_half_lines(plan), plan); }

struct LawAEstimate {
    std::vector<long> counts; // counts[n] = #{A = n}, n <= max_bin; counts[0] = A beyond max_bin or censored
    long replicas = 0;
    ChiSquare vs_exact;     // against the exact law (series, or lattice recursion for MUTUAL unit spacing)
    std::vector<double> exact;

    Estimate probability(long n) const { return proportion(counts.at(static_cast<std::size_t>(n)), replicas); }
};

inline std::vector<double> exact_law_A(const InterdistanceSpec& spec, const ModelParams& params, long max_bin)
{
    std::vector<double> e(static_cast<std::size_t>(max_bin + 1), 0.0);
    if (params.rule == CollisionRule::Mutual && !spec.is_continuous()) {
        if (!spec.is_delta1())
            throw std::invalid_argument("exact MUTUAL law is only available for unit spacing");
        e = law_A_delta1_values(CollisionRule::Mutual, to_double(params.p), max_bin);
    } else {
        e = build_series<double>(params.p, max_bin).pn;
    }
    e[0] = 0;
    return e;
}

inline LawAEstimate law_from_outcomes(const std::vector<HalfLineOutcome>& out, const ExperimentPlan& plan, long max_bin)
{
    LawAEstimate l;
    l.replicas = static_cast<long>(out.size());
    l.counts.assign(static_cast<std::size_t>(max_bin + 1), 0);
    for (const auto& o : out)
        ++l.counts[o.A >= 1 && o.A <= max_bin ? static_cast<std::size_t>(o.A) : 0];
    l.exact = exact_law_A(plan.spec, plan.params, max_bin);
    std::vector<long> obs;
    std::vector<double> prob;
    for (long k = 1; k <= max_bin; ++k) {
        if (l.exact[static_cast<std::size_t>(k)] == 0) {
            if (l.counts[static_cast<std::size_t>(k)] != 0)
                throw std::logic_error("law of A: mass on an impossible value");
            continue;
        }
        obs.push_back(l.counts[static_cast<std::size_t>(k)]);
        prob.push_back(l.exact[static_cast<std::size_t>(k)]);
    }
    l.vs_exact = chi2_goodness(obs, prob, l.replicas);
    return l;
}

/// Empirical law of A on 1..max_bin. The window only has to hold max_bin
/// particles, since A <= max_bin is decided by them.
inline LawAEstimate estimate_law_A(const ExperimentPlan& plan, long max_bin = 31)
{
    if (plan.n < max_bin)
        throw std::invalid_argument("estimate_law_A: window shorter than max_bin");
    return law_from_outcomes(sample_half_lines(plan), plan, max_bin);
}

/// Two-sample test that two spacing laws give the same law of A (1..max_bin, rest pooled).
inline ChiSquare compare_law_A(const LawAEstimate& a, const LawAEstimate& b)
{
    if (a.counts.size() != b.counts.size())
        throw std::invalid_argument("compare_law_A: bin mismatch");
    std::vector<long> x, y;
    for (std::size_t k = 1; k < a.counts.size(); ++k)
        if (a.counts[k] + b.counts[k] > 0) {
            x.push_back(a.counts[k]);
            y.push_back(b.counts[k]);
        }
    x.push_back(a.counts[0]);
    y.push_back(b.counts[0]);
    return chi2_two_sample(x, y);
}

/// E[#surviving statics - #surviving left-movers] among plan.n particles.
inline Estimate estimate_expected_Nk(const ExperimentPlan& plan)
{
    plan.params.validate();
    auto xs = with_coord(plan.spec, [&](auto tag) {
        using Coord = decltype(tag);
        return replica_map<double>(plan.replicas, plan.threads, [&](long r) {
            auto c = sample_config<Coord>(plan.n, plan.spec, plan.params, replica_seed(plan.seed, static_cast<std::uint64_t>(r)));
            double nk = 0;
            for (const auto& [index, v] : resolve(c, plan.params.rule, {false}).survivors())
                nk += v == Velocity::Static ? 1 : v == Velocity::Left ? -1 : 0;
            return nk;
        });
    });
    return mean_estimate(xs);
}

// ---------------------------------------------------------------------------
// Identities for the fate of particle 1

struct IdentityReport {
    double q = 1;                // theory value used in the targets
    Estimate r, s, residual;     // residual: q - [(1-p)/2 + p q^2 + s + ((1-p)/2 - r - s) q] with theory q
    double r_target = 0, s_target = 0;
    double uncertified_fraction = 0;
    double tail = 0;

    bool passes(double k = 3) const { return r.agrees(r_target, k) && s.agrees(s_target, k) && residual.agrees(0, k); }
};

inline IdentityReport identity_checks(const ExperimentPlan& plan)
{
    if (plan.params.rule != CollisionRule::Spin)
        throw std::invalid_argument("identity_checks is stated for the SPIN rule");
    auto out = sample_half_lines(plan);
    const double p = to_double(plan.params.p), pb = (1 - p) / 2;
    IdentityReport rep;
    rep.q = closed_forms(plan.params.p).q;
    const double q = rep.q;
    rep.tail = crossing_tail(plan.spec, plan.params, plan.n);
    std::vector<double> rs, ss, res;
    long uncertified = 0;
    for (const auto& o : out) {
        const bool hits_static = o.v1 == Velocity::Right && o.partner_of_1 == Velocity::Static;
        const bool s_event = o.A != 0 && hits_static;
        const bool r_event = o.A == 0 && hits_static && o.fate1_certified;
        if (o.A == 0 && o.v1 == Velocity::Right && !o.fate1_certified)
            ++uncertified;
        rs.push_back(r_event);
        ss.push_back(s_event);
        // the residual is affine in (s, r): q - pb - p q^2 - pb q + s (q - 1) + r q
        res.push_back(q - pb - p * q * q - pb * q + (q - 1) * double(s_event) + q * double(r_event));
    }
    const long R = static_cast<long>(out.size());
    rep.uncertified_fraction = double(uncertified) / double(R);
    rep.r = proportion(static_cast<long>(std::count(rs.begin(), rs.end(), 1.0)), R);
    rep.s = proportion(static_cast<long>(std::count(ss.begin(), ss.end(), 1.0)), R);
    rep.residual = mean_estimate(res);
    rep.r.bias_bound = rep.tail + rep.uncertified_fraction;
    rep.s.bias_bound = rep.tail;
    rep.residual.bias_bound = (1 - q) * rep.tail + q * (rep.tail + rep.uncertified_fraction);
    rep.r_target = p * q * (1 - q);
    rep.s_target = 0.5 * p * q * q;
    return rep;
}

// ---------------------------------------------------------------------------
// sigma = P(D = D' < infinity) for the MUTUAL unit-spacing model

struct SigmaReport {
    Estimate sigma, q;
    double q_from_sigma = 0;   // -1 + sqrt(1/p - sigma_hat)
    double combined_std_err = 0;
    double tail = 0;

    bool dichotomy_holds(double k = 3) const
    {
        return std::fabs(q.point - q_from_sigma) <= k * combined_std_err + q.bias_bound;
    }
};

inline SigmaReport estimate_sigma_hat(const ExperimentPlan& plan)
{
    if (!plan.spec.is_delta1())
        throw std::invalid_argument("estimate_sigma_hat needs unit spacing (sigma depends on the spacing law)");
    if (plan.params.rule != CollisionRule::Mutual)
        throw std::invalid_argument("estimate_sigma_hat needs the MUTUAL rule");
    auto out = sample_half_lines(plan);
    SigmaReport rep;
    const long pairs = static_cast<long>(out.size()) / 2;
    long equal = 0, hits = 0;
    for (long i = 0; i < pairs; ++i) {
        const auto& a = out[static_cast<std::size_t>(2 * i)];
        const auto& b = out[static_cast<std::size_t>(2 * i + 1)];
        equal += a.A != 0 && a.A == b.A;
    }
    for (const auto& o : out)
        hits += o.A != 0;
    rep.tail = crossing_tail(plan.spec, plan.params, plan.n);
    rep.sigma = proportion(equal, pairs);
    rep.sigma.bias_bound = rep.tail * rep.tail; // P(D = D' > n) <= P(n < D < infinity)^2
    rep.q = proportion(hits, static_cast<long>(out.size()));
    rep.q.censored_fraction = 1 - rep.q.point;
    rep.q.bias_bound = rep.tail;
    const double p = to_double(plan.params.p);
    rep.q_from_sigma = hat_q_from_sigma(plan.params.p, rep.sigma.point);
    const double slope = 0.5 / std::sqrt(1 / p - rep.sigma.point);
    rep.combined_std_err = std::hypot(rep.q.std_err, slope * rep.sigma.std_err);
    return rep;
}

// ---------------------------------------------------------------------------
// Full-line windows: theta and the skyline

struct SkylineReport {
    Estimate theta;
    long windows = 0, surviving = 0, contaminated = 0;
    std::array<long, 4> sigma_counts{};               // up, right-up, up-left, right-left
    std::array<std::vector<long>, 4> delta_counts;    // delta_counts[shape][delta]
    std::vector<std::vector<double>> up_runs;         // 1{sigma = up} per side, in block order
    ChiSquare sigma_fit, delta_right_up_fit, delta_right_left_fit;
    Estimate lag1;

    long blocks() const { return sigma_counts[0] + sigma_counts[1] + sigma_counts[2] + sigma_counts[3]; }
};

namespace detail {

struct WindowHarvest {
    bool survives = false;
    bool contaminated = false;
    Skyline sky;
};

inline void tally(SkylineReport& rep, const std::vector<SkylineBlock>& side)
{
    std::vector<double> run;
    for (const auto& b : side) {
        const auto k = static_cast<std::size_t>(b.sigma);
        ++rep.sigma_counts[k];
        auto& h = rep.delta_counts[k];
        if (h.size() <= static_cast<std::size_t>(b.delta))
            h.resize(static_cast<std::size_t>(b.delta + 1), 0);
        ++h[static_cast<std::size_t>(b.delta)];
        run.push_back(b.sigma == SkylineShape::Up ? 1.0 : 0.0);
    }
    rep.up_runs.push_back(std::move(run));
}

} // namespace detail

/// theta = P(a static at 0 survives) from full-line windows with n particles per
/// side; the skyline is harvested from windows where it survives. Needs p > 1/4.
inline SkylineReport estimate_theta_and_skyline(const ExperimentPlan& plan, bool harvest = true)
{
    if (regime_of(plan.params.p) != Regime::Super)
        throw std::invalid_argument("theta and the skyline need p > 1/4");
    if (plan.params.rule != CollisionRule::Spin)
        throw std::invalid_argument("the skyline is defined for the SPIN rule");
    auto harvests = with_coord(plan.spec, [&](auto tag) {
        using Coord = decltype(tag);
        return replica_map<detail::WindowHarvest>(plan.replicas, plan.threads, [&](long r) {
            auto c = sample_full_line_window<Coord>(plan.n, plan.n, plan.spec, plan.params,
                                                    replica_seed(plan.seed, static_cast<std::uint64_t>(r)), true);
            auto res = resolve(c, CollisionRule::Spin, {false});
            detail::WindowHarvest h;
            h.survives = res.fates[c.position_of(0)].alive;
            if (h.survives && harvest) {
                try {
                    h.sky = extract_skyline(res, c, 0, plan.safety_margin);
                } catch (const SkylineContamination&) {
                    h.contaminated = true;
                }
            }
            return h;
        });
    });

    SkylineReport rep;
    rep.windows = static_cast<long>(harvests.size());
    for (const auto& h : harvests) {
        rep.surviving += h.survives;
        rep.contaminated += h.contaminated;
        if (h.survives && !h.contaminated && harvest) {
            detail::tally(rep, h.sky.right);
            detail::tally(rep, h.sky.left);
        }
    }
    rep.theta = proportion(rep.surviving, rep.windows);
    // the window can only miss a crossing that starts beyond it, on either side
    rep.theta.bias_bound = 2 * crossing_tail(plan.spec, plan.params, plan.n);
    if (!harvest || rep.blocks() == 0)
        return rep;

    auto k = closed_forms(plan.params.p);
    rep.sigma_fit = chi2_goodness({rep.sigma_counts.begin(), rep.sigma_counts.end()},
                                  {k.skyline_sigma_law.begin(), k.skyline_sigma_law.end()}, rep.blocks());

    // P(delta = n | right-up) = P(A = n | A < infinity); P(delta = n | right-left) = delta_{n+1} / (1 - sqrt p)^2
    long max_delta = 1;
    for (const auto& h : rep.delta_counts)
        max_delta = std::max<long>(max_delta, static_cast<long>(h.size()));
    auto t = build_series<double>(plan.params.p, max_delta + 2);
    const double sp = std::sqrt(to_double(plan.params.p));
    auto fit = [&](SkylineShape shape, auto law) {
        const auto& h = rep.delta_counts[static_cast<std::size_t>(shape)];
        long total = 0;
        for (long c : h)
            total += c;
        std::vector<long> obs;
        std::vector<double> prob;
        for (long n = 1; n <= max_delta; ++n) {
            const double pr = law(n);
            const long c = n < static_cast<long>(h.size()) ? h[static_cast<std::size_t>(n)] : 0;
            if (pr == 0) {
                if (c != 0)
                    throw std::logic_error("skyline: block width with zero probability");
                continue;
            }
            obs.push_back(c);
            prob.push_back(pr);
        }
        return total ? chi2_goodness(obs, prob, total) : ChiSquare{};
    };
    rep.delta_right_up_fit = fit(SkylineShape::RightUp, [&](long n) { return t.pn[static_cast<std::size_t>(n)] / k.q; });
    rep.delta_right_left_fit = fit(SkylineShape::RightLeft, [&](long n) {
        return t.delta[static_cast<std::size_t>(n + 1)] / ((1 - sp) * (1 - sp));
    });
    rep.lag1 = lag1_correlation(rep.up_runs);
    return rep;
}

// ---------------------------------------------------------------------------
// Densities

struct DensityPoint {
    double t = 0;
    Estimate c0, c_plus;
};

class MarginError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// floor(x) as a coordinate, for x >= 0.
template <class Coord>
Coord floor_coord(const Rational& x)
{
    Integer z = x.get_num() / x.get_den();
    if constexpr (std::is_same_v<Coord, Tick>) {
        Integer hi = z >> 64;
        Integer lo = z - (hi << 64);
        return (static_cast<Tick>(mpz_get_si(hi.get_mpz_t())) << 64) + static_cast<Tick>(mpz_get_ui(lo.get_mpz_t()));
    } else {
        return static_cast<Coord>(mpz_get_si(z.get_mpz_t()));
    }
}

} // namespace detail

inline double mean_gap(const InterdistanceSpec& spec)
{
    if (auto e = std::get_if<ExponentialGap>(&spec.kind()))
        return 1 / e->rate;
    if (auto u = std::get_if<UniformGap>(&spec.kind()))
        return (u->a + u->b) / 2;
    return to_double(spec.constant_gap());
}

/// Per-particle densities of statics alive after t and of right-movers alive
/// after t (equivalently, that reached distance t), over particles with
/// |x| <= core. The window reaches core + 2 max(times) on both sides or the
/// call fails.
inline std::vector<DensityPoint> density_profile(const ExperimentPlan& plan, const std::vector<double>& times)
{
    if (times.empty())
        return {};
    for (double t : times)
        if (!(t >= 0))
            throw std::invalid_argument("density_profile: times must be >= 0");
    const double tmax = *std::max_element(times.begin(), times.end());
    const double reach = plan.core + 2 * tmax;
    const double g = mean_gap(plan.spec);
    const long side = static_cast<long>(std::ceil(reach / g * 1.05 + 10 * std::sqrt(reach / g) + 10));

    struct Counts {
        std::vector<double> statics, movers;
        double particles = 0;
    };
    auto per = with_coord(plan.spec, [&](auto tag) {
        using Coord = decltype(tag);
        return replica_map<Counts>(plan.replicas, plan.threads, [&](long r) {
            auto c = sample_full_line_window<Coord>(side, side, plan.spec, plan.params,
                                                    replica_seed(plan.seed, static_cast<std::uint64_t>(r)));
            const Coord reach_units = detail::floor_coord<Coord>(Rational(reach) / c.unit);
            if (c.particles.back().x < reach_units || -c.particles.front().x < reach_units)
                throw MarginError("density_profile: window does not cover core + 2 t_max");
            auto res = resolve(c, plan.params.rule, {false});
            const Coord core_units = detail::floor_coord<Coord>(Rational(plan.core) / c.unit);
            Counts k;
            k.statics.assign(times.size(), 0);
            k.movers.assign(times.size(), 0);
            std::vector<Coord> thr;
            for (double t : times)
                thr.push_back(detail::floor_coord<Coord>(Rational(2 * t) / c.unit));
            for (std::size_t i = 0; i < c.size(); ++i) {
                const auto& q = c.particles[i];
                if (q.x > core_units || -q.x > core_units)
                    continue;
                k.particles += 1;
                if (q.v == Velocity::Left)
                    continue;
                const auto& f = res.fates[i];
                for (std::size_t j = 0; j < times.size(); ++j)
                    if (f.alive || f.time2 > thr[j])
                        (q.v == Velocity::Static ? k.statics : k.movers)[j] += 1;
            }
            return k;
        });
    });

    std::vector<DensityPoint> out;
    std::vector<double> w;
    for (const auto& k : per)
        w.push_back(k.particles);
    for (std::size_t j = 0; j < times.size(); ++j) {
        std::vector<double> xs, xm;
        for (const auto& k : per) {
            xs.push_back(k.statics[j]);
            xm.push_back(k.movers[j]);
        }
        out.push_back({times[j], ratio_estimate(xs, w), ratio_estimate(xm, w)});
    }
    return out;
}

} // namespace ballistic
