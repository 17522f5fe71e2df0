#pragma once

#include "ballistic/core_model.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ballistic {

struct CollisionEvent {
    Rational time;
    Rational location;
    std::vector<long> participants; // position order
    std::vector<long> annihilated;
    std::optional<long> survivor;   // SPIN triples only

    bool operator==(const CollisionEvent&) const = default;
};

/// What happened to one particle. Times and locations are doubled and kept in
/// coordinate units so that the whole engine stays in integer arithmetic.
template <class Coord>
struct Fate {
    bool alive = true;
    int partner = -1; // slot of the pairing partner, -1 if none
    int event = -1;
    Coord time2{};
    Coord loc2{};
};

template <class Coord>
struct Crossing {
    long index = 0;
    std::size_t slot = 0;
    Coord x{};
};

template <class Coord>
struct ResolutionResult {
    CollisionRule rule = CollisionRule::Spin;
    Rational unit{1};
    Coord origin{};
    std::vector<long> index;            // slot -> particle index
    std::vector<Velocity> velocity;     // slot -> velocity
    std::vector<Coord> position;        // slot -> initial position
    std::vector<Fate<Coord>> fates;     // slot -> fate
    std::vector<CollisionEvent> events; // empty unless recorded
    std::optional<Crossing<Coord>> first_left_crossing;

    std::size_t size() const { return fates.size(); }

    std::map<long, long> pairing() const
    {
        std::map<long, long> m;
        for (std::size_t i = 0; i < fates.size(); ++i)
            if (fates[i].partner >= 0)
                m[index[i]] = index[static_cast<std::size_t>(fates[i].partner)];
        return m;
    }

    std::vector<std::pair<long, Velocity>> survivors() const
    {
        std::vector<std::pair<long, Velocity>> s;
        for (std::size_t i = 0; i < fates.size(); ++i)
            if (fates[i].alive)
                s.emplace_back(index[i], velocity[i]);
        return s;
    }

    std::size_t survivor_count() const
    {
        return static_cast<std::size_t>(std::count_if(fates.begin(), fates.end(), [](const auto& f) { return f.alive; }));
    }

    Rational death_time(std::size_t slot) const { return halve(to_rational(fates[slot].time2) * unit); }
    Rational death_location(std::size_t slot) const { return halve(to_rational(fates[slot].loc2) * unit); }

    /// D = x_A and the crossing time of the origin.
    std::optional<std::pair<long, Rational>> crossing_record() const
    {
        if (!first_left_crossing)
            return std::nullopt;
        return std::make_pair(first_left_crossing->index, to_rational(first_left_crossing->x) * unit);
    }

    std::optional<Rational> crossing_time() const
    {
        if (!first_left_crossing)
            return std::nullopt;
        return to_rational(first_left_crossing->x - origin) * unit;
    }
};

struct ResolveOptions {
    bool record_events = true;
};

namespace detail {

template <class Coord>
struct Candidate {
    Coord time2, loc2;
    int left, right;

    bool operator>(const Candidate& o) const
    {
        if (time2 != o.time2)
            return time2 > o.time2;
        if (loc2 != o.loc2)
            return loc2 > o.loc2;
        return left > o.left;
    }
};

template <class Coord>
Candidate<Coord> candidate(const std::vector<Particle<Coord>>& ps, int i, int j)
{
    const auto& a = ps[static_cast<std::size_t>(i)];
    const auto& b = ps[static_cast<std::size_t>(j)];
    Coord gap = b.x - a.x;
    if (a.v == Velocity::Right && b.v == Velocity::Left)
        return {gap, a.x + b.x, i, j};
    if (a.v == Velocity::Right) // b static
        return {gap + gap, b.x + b.x, i, j};
    return {gap + gap, a.x + a.x, i, j}; // a static, b left
}

template <class Coord>
void check_positions(const Configuration<Coord>& config)
{
    config.validate();
}

template <class Coord>
void find_first_crossing(ResolutionResult<Coord>& r, const Configuration<Coord>& config)
{
    const Coord origin2 = config.origin + config.origin;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto& p = config.particles[i];
        if (p.v != Velocity::Left || !(p.x > config.origin))
            continue;
        const auto& f = r.fates[i];
        if (f.alive || f.loc2 <= origin2) {
            if (!r.first_left_crossing || p.index < r.first_left_crossing->index)
                r.first_left_crossing = Crossing<Coord>{p.index, i, p.x};
        }
    }
}

} // namespace detail

/// Event-driven resolution. Alive particles form a doubly linked list in position
/// order; only adjacent approaching pairs carry candidate events.
template <class Coord>
ResolutionResult<Coord> resolve(const Configuration<Coord>& config, CollisionRule rule,
                                const ResolveOptions& options = {})
{
    detail::check_positions(config);
    const auto& ps = config.particles;
    const int n = static_cast<int>(ps.size());

    ResolutionResult<Coord> r;
    r.rule = rule;
    r.unit = config.unit;
    r.origin = config.origin;
    r.fates.assign(ps.size(), {});
    r.index.resize(ps.size());
    r.velocity.resize(ps.size());
    r.position.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        r.index[i] = ps[i].index;
        r.velocity[i] = ps[i].v;
        r.position[i] = ps[i].x;
    }

    std::vector<int> prev(ps.size()), next(ps.size());
    for (int i = 0; i < n; ++i) {
        prev[static_cast<std::size_t>(i)] = i - 1;
        next[static_cast<std::size_t>(i)] = i + 1 < n ? i + 1 : -1;
    }

    using Cand = detail::Candidate<Coord>;
    std::vector<Cand> heap_store;
    heap_store.reserve(ps.size());
    std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> queue(std::greater<Cand>{}, std::move(heap_store));

    auto approaching = [&](int i, int j) {
        return value(ps[static_cast<std::size_t>(i)].v) > value(ps[static_cast<std::size_t>(j)].v);
    };
    auto push = [&](int i, int j) {
        if (i >= 0 && j >= 0 && approaching(i, j))
            queue.push(detail::candidate(ps, i, j));
    };
    for (int i = 0; i + 1 < n; ++i)
        push(i, i + 1);

    auto unlink = [&](int i) {
        int a = prev[static_cast<std::size_t>(i)], b = next[static_cast<std::size_t>(i)];
        if (a >= 0)
            next[static_cast<std::size_t>(a)] = b;
        if (b >= 0)
            prev[static_cast<std::size_t>(b)] = a;
    };
    auto kill = [&](int i, int partner, const Cand& c, int event) {
        auto& f = r.fates[static_cast<std::size_t>(i)];
        f.alive = false;
        f.partner = partner;
        f.event = event;
        f.time2 = c.time2;
        f.loc2 = c.loc2;
    };

    int event_id = 0;
    while (!queue.empty()) {
        Cand c = queue.top();
        queue.pop();
        const auto li = static_cast<std::size_t>(c.left), ri = static_cast<std::size_t>(c.right);
        if (!r.fates[li].alive || !r.fates[ri].alive || next[li] != c.right)
            continue;

        // look for a third particle meeting the static at the same instant
        int static_slot = -1, third = -1;
        if (ps[ri].v == Velocity::Static) {
            static_slot = c.right;
            int k = next[ri];
            if (k >= 0 && ps[static_cast<std::size_t>(k)].v == Velocity::Left
                && ps[static_cast<std::size_t>(k)].x - ps[ri].x == ps[ri].x - ps[li].x)
                third = k;
        } else if (ps[li].v == Velocity::Static) {
            static_slot = c.left;
            int h = prev[li];
            if (h >= 0 && ps[static_cast<std::size_t>(h)].v == Velocity::Right
                && ps[li].x - ps[static_cast<std::size_t>(h)].x == ps[ri].x - ps[li].x)
                third = h;
        }

        std::vector<int> parts;
        std::vector<int> dead;
        int survivor = -1;
        if (third < 0) {
            parts = {c.left, c.right};
            dead = parts;
            kill(c.left, c.right, c, event_id);
            kill(c.right, c.left, c, event_id);
        } else {
            int lo = std::min({c.left, c.right, third}), hi = std::max({c.left, c.right, third});
            parts = {lo, static_slot, hi};
            if (rule == CollisionRule::Mutual) {
                dead = parts;
                for (int s : parts)
                    kill(s, -1, c, event_id);
            } else {
                // the mover whose velocity equals the static's spin goes through
                bool right_survives = ps[static_cast<std::size_t>(static_slot)].s == Spin::Up;
                survivor = right_survives ? lo : hi;
                int partner = right_survives ? hi : lo;
                dead = {std::min(static_slot, partner), std::max(static_slot, partner)};
                kill(static_slot, partner, c, event_id);
                kill(partner, static_slot, c, event_id);
            }
        }

        const int left_end = prev[static_cast<std::size_t>(dead.front())];
        const int right_end = next[static_cast<std::size_t>(dead.back())];
        for (int s : dead)
            unlink(s);
        if (survivor >= 0) {
            // only the side facing the removed pair gets a new neighbour
            if (survivor < static_slot)
                push(survivor, next[static_cast<std::size_t>(survivor)]);
            else
                push(prev[static_cast<std::size_t>(survivor)], survivor);
        } else {
            push(left_end, right_end);
        }

        if (options.record_events) {
            CollisionEvent e;
            e.time = halve(to_rational(c.time2) * config.unit);
            e.location = halve(to_rational(c.loc2) * config.unit);
            for (int s : parts)
                e.participants.push_back(ps[static_cast<std::size_t>(s)].index);
            for (int s : dead)
                e.annihilated.push_back(ps[static_cast<std::size_t>(s)].index);
            if (survivor >= 0)
                e.survivor = ps[static_cast<std::size_t>(survivor)].index;
            r.events.push_back(std::move(e));
        }
        ++event_id;
    }

    detail::find_first_crossing(r, config);
    return r;
}

/// A and D = x_A for a half-line configuration, or nullopt when censored.
template <class Coord>
std::optional<std::pair<long, Rational>> first_crossing(const Configuration<Coord>& config, CollisionRule rule)
{
    if (!config.half_line())
        throw std::invalid_argument("first_crossing needs a half-line configuration");
    return resolve(config, rule, {false}).crossing_record();
}

/// Reverses the block [x_1, x_k]: x -> x_1 + x_k - x, with velocities and spins
/// negated there. Indices are reassigned in position order.
template <class Coord>
Configuration<Coord> reverse_config(const Configuration<Coord>& config, std::size_t k)
{
    if (k < 1 || k > config.size())
        throw std::out_of_range("reverse_config: k out of range");
    Configuration<Coord> out = config;
    const Coord a = config.particles.front().x, b = config.particles[k - 1].x;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& src = config.particles[k - 1 - i];
        auto& dst = out.particles[i];
        dst.x = a + b - src.x;
        dst.v = -src.v;
        dst.s = -src.s;
        dst.index = config.particles[i].index;
    }
    out.provenance = "reversed";
    return out;
}

inline std::string format_event(const CollisionEvent& e)
{
    auto join = [](const std::vector<long>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    std::string line = "t=" + to_string(e.time) + " x=" + to_string(e.location) + " parts=" + join(e.participants)
                     + " killed=" + join(e.annihilated) + " survivor=";
    line += e.survivor ? std::to_string(*e.survivor) : "-";
    return line;
}

template <class Coord>
void write_event_log(std::ostream& os, const ResolutionResult<Coord>& r)
{
    for (const auto& e : r.events)
        os << format_event(e) << '\n';
}

} // namespace ballistic
