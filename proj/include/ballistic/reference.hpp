#pragma once

#include "ballistic/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace ballistic {

/// Brute-force resolver that evaluates the recursive pairwise definition of
/// mutual annihilation directly from virtual trajectories. O(n^4); meant as an
/// oracle for `resolve` on small inputs.
inline ResolutionResult<Rational> resolve_reference(const Configuration<Rational>& config, CollisionRule rule,
                                                    std::size_t max_n = 12)
{
    config.validate();
    const auto& ps = config.particles;
    const std::size_t n = ps.size();
    if (n > max_n)
        throw std::invalid_argument("resolve_reference: configuration too large");

    // virtual collision times; empty optional means never
    std::vector<std::vector<std::optional<Rational>>> t(n, std::vector<std::optional<Rational>>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (value(ps[i].v) > value(ps[j].v)) {
                Rational tij = (ps[j].x - ps[i].x) / Rational(value(ps[i].v) - value(ps[j].v));
                t[i][j] = t[j][i] = tij;
            }

    enum class Link { Unknown, No, Pair, Triple };
    std::vector<std::vector<Link>> ann(n, std::vector<Link>(n, Link::Unknown));

    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (t[i][j])
                order.emplace_back(i, j);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return *t[a.first][a.second] < *t[b.first][b.second]; });

    // k is gone by `bound` without i or j: annihilated strictly earlier, or paired
    // with a third particle exactly at `bound` (i then survives a SPIN triple)
    auto dead_before = [&](std::size_t k, const Rational& bound, std::size_t i, std::size_t j) {
        for (std::size_t m = 0; m < n; ++m) {
            if (m == k || !t[k][m] || *t[k][m] > bound)
                continue;
            Link l = ann[k][m];
            bool strict = *t[k][m] < bound;
            if (l == Link::Unknown && strict)
                throw std::logic_error("resolve_reference: dependency out of order");
            if (l == Link::Triple && strict)
                return true;
            if (l == Link::Pair && (strict || (m != i && m != j)))
                return true;
        }
        return false;
    };

    for (auto [i, j] : order) {
        const Rational& tij = *t[i][j];
        bool clear = true;
        std::optional<std::size_t> third;
        for (std::size_t k = 0; k < n && clear; ++k) {
            if (k == i || k == j)
                continue;
            std::optional<Rational> m;
            if (t[i][k])
                m = *t[i][k];
            if (t[j][k] && (!m || *t[j][k] < *m))
                m = *t[j][k];
            if (!m || *m > tij)
                continue;
            bool gone = dead_before(k, *m, i, j);
            if (*m < tij)
                clear = gone;
            else if (!gone)
                third = k;
        }
        Link result = Link::No;
        if (clear) {
            if (!third) {
                result = Link::Pair;
            } else if (rule == CollisionRule::Mutual) {
                result = Link::Triple;
            } else {
                int vh = value(ps[*third].v);
                bool spin_ok = (ps[i].v == Velocity::Static && vh == 1 && ps[i].s == Spin::Up)
                            || (ps[j].v == Velocity::Static && vh == -1 && ps[j].s == Spin::Down);
                result = spin_ok ? Link::Pair : Link::No;
            }
        }
        ann[i][j] = ann[j][i] = result;
    }

    ResolutionResult<Rational> r;
    r.rule = rule;
    r.unit = config.unit;
    r.origin = config.origin;
    r.fates.assign(n, {});
    for (const auto& p : ps) {
        r.index.push_back(p.index);
        r.velocity.push_back(p.v);
        r.position.push_back(p.x);
    }

    auto where = [&](std::size_t i, const Rational& time) -> Rational { return ps[i].x + value(ps[i].v) * time; };
    auto mark = [&](std::size_t i, int partner, const Rational& time, int event) {
        auto& f = r.fates[i];
        if (!f.alive)
            throw std::logic_error("resolve_reference: particle annihilated twice");
        f.alive = false;
        f.partner = partner;
        f.event = event;
        f.time2 = 2 * time;
        f.loc2 = 2 * where(i, time);
    };

    int event_id = 0;
    for (auto [i, j] : order) {
        Link l = ann[i][j];
        if (l != Link::Pair && l != Link::Triple)
            continue;
        const Rational& tij = *t[i][j];
        std::vector<std::size_t> parts{i, j};
        for (std::size_t k = 0; k < n; ++k)
            if (k != i && k != j && ((t[i][k] && *t[i][k] == tij) || (t[j][k] && *t[j][k] == tij))
                && !dead_before(k, tij, i, j))
                parts.push_back(k);
        std::sort(parts.begin(), parts.end());
        if (l == Link::Triple) {
            // reported once, from the outer pair
            if (parts.size() != 3 || i != parts[0] || j != parts[2])
                continue;
        }

        CollisionEvent e;
        e.time = tij;
        e.location = where(i, tij);
        for (auto s : parts)
            e.participants.push_back(ps[s].index);
        if (l == Link::Triple) {
            for (auto s : parts) {
                mark(s, -1, tij, event_id);
                e.annihilated.push_back(ps[s].index);
            }
        } else {
            mark(i, static_cast<int>(j), tij, event_id);
            mark(j, static_cast<int>(i), tij, event_id);
            e.annihilated = {ps[i].index, ps[j].index};
            for (auto s : parts)
                if (s != i && s != j)
                    e.survivor = ps[s].index;
        }
        r.events.push_back(std::move(e));
        ++event_id;
    }
    std::stable_sort(r.events.begin(), r.events.end(), [](const CollisionEvent& a, const CollisionEvent& b) {
        if (a.time != b.time)
            return a.time < b.time;
        return a.location < b.location;
    });
    detail::find_first_crossing(r, config);
    return r;
}

/// Compares two resolutions of the same configuration: pairings, survivors,
/// death times and locations, triple outcomes and the event log.
template <class A, class B>
bool same_resolution(const ResolutionResult<A>& a, const ResolutionResult<B>& b, std::string* why = nullptr)
{
    auto fail = [&](const std::string& m) {
        if (why)
            *why = m;
        return false;
    };
    if (a.size() != b.size())
        return fail("size");
    if (a.pairing() != b.pairing())
        return fail("pairing");
    if (a.survivors() != b.survivors())
        return fail("survivors");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.fates[i].alive)
            continue;
        if (a.death_time(i) != b.death_time(i) || a.death_location(i) != b.death_location(i))
            return fail("death of index " + std::to_string(a.index[i]));
    }
    if (a.crossing_record() != b.crossing_record())
        return fail("first crossing");
    if (!a.events.empty() || !b.events.empty()) {
        if (a.events.size() != b.events.size())
            return fail("event count");
        for (std::size_t k = 0; k < a.events.size(); ++k)
            if (!(a.events[k] == b.events[k]))
                return fail("event " + format_event(a.events[k]) + " vs " + format_event(b.events[k]));
    }
    return true;
}

/// Calls f(config) for every velocity word on positions 1..n and every spin
/// assignment on its statics (movers keep spin +1).
template <class F>
void for_each_lattice_config(int n, F&& f)
{
    Configuration<std::int64_t> c;
    c.particles.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        c.particles[static_cast<std::size_t>(i)].index = i + 1;
        c.particles[static_cast<std::size_t>(i)].x = i + 1;
    }
    long words = 1;
    for (int i = 0; i < n; ++i)
        words *= 3;
    for (long w = 0; w < words; ++w) {
        long code = w;
        std::vector<std::size_t> statics;
        for (int i = 0; i < n; ++i) {
            auto& p = c.particles[static_cast<std::size_t>(i)];
            p.v = static_cast<Velocity>(code % 3 - 1);
            p.s = Spin::Up;
            code /= 3;
            if (p.v == Velocity::Static)
                statics.push_back(static_cast<std::size_t>(i));
        }
        for (unsigned long mask = 0; mask < (1UL << statics.size()); ++mask) {
            for (std::size_t b = 0; b < statics.size(); ++b)
                c.particles[statics[b]].s = (mask >> b) & 1 ? Spin::Down : Spin::Up;
            f(static_cast<const Configuration<std::int64_t>&>(c));
        }
    }
}

} // namespace ballistic
