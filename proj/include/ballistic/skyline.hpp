#pragma once

#include "ballistic/engine.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace ballistic {

enum class SkylineShape { Up, RightUp, UpLeft, RightLeft };

inline const char* to_string(SkylineShape s)
{
    switch (s) {
    case SkylineShape::Up: return "up";
    case SkylineShape::RightUp: return "right-up";
    case SkylineShape::UpLeft: return "up-left";
    case SkylineShape::RightLeft: return "right-left";
    }
    return "?";
}

struct SkylineBlock {
    long delta = 0;
    SkylineShape sigma = SkylineShape::Up;

    bool operator==(const SkylineBlock&) const = default;
};

/// Blocks to the right of the centre (k = 1, 2, ...) and to its left
/// (k = -1, -2, ..., already mirrored so both sides share one law).
struct Skyline {
    std::vector<SkylineBlock> right;
    std::vector<SkylineBlock> left;
};

class SkylineContamination : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline SkylineShape classify(Velocity vl, Velocity vr)
{
    if (vl == Velocity::Right && vr == Velocity::Static)
        return SkylineShape::RightUp;
    if (vl == Velocity::Right && vr == Velocity::Left)
        return SkylineShape::RightLeft;
    if (vl == Velocity::Static && vr == Velocity::Left)
        return SkylineShape::UpLeft;
    throw std::logic_error("skyline: impossible velocity pair");
}

} // namespace detail

/// Walks the skyline outward from a surviving static `center`. A block is
/// emitted only when it sits at least `safety_margin` slots from the window edge
/// and, for annihilating blocks, the light cone of the collision fits inside the
/// window. A right-mover (resp. left-mover) opening a block that survives in the
/// window ends that side, since its partner lies beyond the window.
template <class Coord>
Skyline extract_skyline(const ResolutionResult<Coord>& result, const Configuration<Coord>& config, long center,
                        long safety_margin)
{
    if (result.rule != CollisionRule::Spin)
        throw std::invalid_argument("skyline needs the SPIN rule");
    if (safety_margin < 1)
        throw std::invalid_argument("safety margin must be positive");
    const std::size_t c = config.position_of(center);
    if (config.particles[c].v != Velocity::Static || !result.fates[c].alive)
        throw std::invalid_argument("skyline centre is not a surviving static particle");

    const long n = static_cast<long>(config.size());
    const Coord lo = config.particles.front().x, hi = config.particles.back().x;
    Skyline sky;

    // dir = +1 walks right, -1 walks left; velocities are mirrored on the left
    for (int dir : {+1, -1}) {
        auto& out = dir > 0 ? sky.right : sky.left;
        long edge = static_cast<long>(c);
        for (;;) {
            const long open = edge + dir;
            if (open < safety_margin || open >= n - safety_margin)
                break;
            const auto os = static_cast<std::size_t>(open);
            const Velocity v_open = dir > 0 ? config.particles[os].v : -config.particles[os].v;
            const auto& fate = result.fates[os];
            if (v_open == Velocity::Left)
                throw SkylineContamination("skyline: block opens with a mover heading to the centre at index "
                                           + std::to_string(config.particles[os].index));
            if (fate.alive) {
                if (v_open == Velocity::Static) {
                    out.push_back({0, SkylineShape::Up});
                    edge = open;
                    continue;
                }
                break; // its partner is outside the window
            }
            if (fate.partner < 0)
                throw std::logic_error("skyline: triple annihilation under the SPIN rule");
            const long close = fate.partner;
            if ((close - open) * dir <= 0)
                throw SkylineContamination("skyline: block partner lies towards the centre");
            if (close < safety_margin || close >= n - safety_margin)
                break;
            const auto cs = static_cast<std::size_t>(close);
            const Velocity v_close = dir > 0 ? config.particles[cs].v : -config.particles[cs].v;
            // light cone: everything that can influence the pair starts in [x_a - T, x_b + T]
            const std::size_t a = std::min(os, cs), b = std::max(os, cs);
            const Coord t = result.fates[os].time2; // 2T in coordinate units
            if (config.particles[a].x + config.particles[a].x - t <= lo + lo
                || config.particles[b].x + config.particles[b].x + t >= hi + hi)
                break;
            out.push_back({(close - open) * dir, detail::classify(v_open, v_close)});
            edge = close;
        }
    }
    return sky;
}

} // namespace ballistic
