#pragma once

#include "ballistic/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ballistic {

enum class Velocity : std::int8_t { Left = -1, Static = 0, Right = 1 };
enum class Spin : std::int8_t { Down = -1, Up = 1 };

constexpr Velocity operator-(Velocity v) { return static_cast<Velocity>(-static_cast<int>(v)); }
constexpr Spin operator-(Spin s) { return static_cast<Spin>(-static_cast<int>(s)); }
constexpr int value(Velocity v) { return static_cast<int>(v); }
constexpr int value(Spin s) { return static_cast<int>(s); }

inline char symbol(Velocity v)
{
    switch (v) {
    case Velocity::Left: return '<';
    case Velocity::Static: return '.';
    case Velocity::Right: return '>';
    }
    return '?';
}

/// How a static particle resolves a simultaneous hit from both sides.
enum class CollisionRule {
    Spin,   ///< static and one mover annihilate; the static's spin picks the surviving mover
    Mutual  ///< all three annihilate
};

inline std::string to_string(CollisionRule r) { return r == CollisionRule::Spin ? "spin" : "mutual"; }

inline CollisionRule parse_rule(std::string_view s)
{
    if (s == "spin" || s == "SPIN")
        return CollisionRule::Spin;
    if (s == "mutual" || s == "MUTUAL")
        return CollisionRule::Mutual;
    throw std::invalid_argument("unknown collision rule: " + std::string(s));
}

/// Coordinates are stored in integer or rational units; `Configuration::unit`
/// gives the physical length of one unit.
template <class Coord>
struct Particle {
    long index = 0;
    Coord x{};
    Velocity v = Velocity::Static;
    Spin s = Spin::Up;
};

template <class Coord>
struct Configuration {
    std::vector<Particle<Coord>> particles;
    Coord origin{};
    Rational unit{1};
    std::string provenance = "explicit";

    std::size_t size() const { return particles.size(); }

    std::size_t position_of(long index) const
    {
        for (std::size_t i = 0; i < particles.size(); ++i)
            if (particles[i].index == index)
                return i;
        throw std::out_of_range("no particle with index " + std::to_string(index));
    }

    void validate() const
    {
        if (particles.empty())
            throw std::invalid_argument("configuration is empty");
        for (std::size_t i = 1; i < particles.size(); ++i) {
            if (particles[i].x == particles[i - 1].x)
                throw std::invalid_argument("duplicate particle positions");
            if (particles[i].x < particles[i - 1].x)
                throw std::invalid_argument("particle positions are not increasing");
        }
    }

    bool half_line() const { return !particles.empty() && particles.front().x > origin; }
};

/// Builds an explicit configuration with indices 1..n.
template <class Coord>
Configuration<Coord> make_config(const std::vector<std::pair<Coord, Velocity>>& spec,
                                 const std::vector<Spin>& spins = {})
{
    Configuration<Coord> c;
    long idx = 1;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        Particle<Coord> p;
        p.index = idx++;
        p.x = spec[i].first;
        p.v = spec[i].second;
        p.s = i < spins.size() ? spins[i] : Spin::Up;
        c.particles.push_back(p);
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Interdistance laws

struct ConstantGap { Rational d; };
struct ExponentialGap { double rate = 1.0; };
struct UniformGap { double a = 0.0, b = 1.0; };
struct LatticeUnit {};

class InterdistanceSpec {
public:
    using Kind = std::variant<ConstantGap, ExponentialGap, UniformGap, LatticeUnit>;

    InterdistanceSpec() : kind_(LatticeUnit{}) {}
    InterdistanceSpec(Kind k) : kind_(std::move(k)) { validate(); }

    static InterdistanceSpec constant(Rational d) { return InterdistanceSpec(ConstantGap{std::move(d)}); }
    static InterdistanceSpec exponential(double rate) { return InterdistanceSpec(ExponentialGap{rate}); }
    static InterdistanceSpec uniform(double a, double b) { return InterdistanceSpec(UniformGap{a, b}); }
    static InterdistanceSpec delta1() { return InterdistanceSpec(LatticeUnit{}); }

    const Kind& kind() const { return kind_; }

    bool is_continuous() const
    {
        return std::holds_alternative<ExponentialGap>(kind_) || std::holds_alternative<UniformGap>(kind_);
    }

    bool is_delta1() const
    {
        if (std::holds_alternative<LatticeUnit>(kind_))
            return true;
        if (auto c = std::get_if<ConstantGap>(&kind_))
            return c->d == 1;
        return false;
    }

    /// Gap for the constant laws (LatticeUnit is Constant(1)).
    Rational constant_gap() const
    {
        if (std::holds_alternative<LatticeUnit>(kind_))
            return Rational(1);
        if (auto c = std::get_if<ConstantGap>(&kind_))
            return c->d;
        throw std::logic_error("interdistance law is not constant");
    }

    void validate() const
    {
        if (auto c = std::get_if<ConstantGap>(&kind_)) {
            if (c->d <= 0)
                throw std::invalid_argument("constant gap must be positive");
        } else if (auto e = std::get_if<ExponentialGap>(&kind_)) {
            if (!(e->rate > 0) || !std::isfinite(e->rate))
                throw std::invalid_argument("exponential rate must be positive");
        } else if (auto u = std::get_if<UniformGap>(&kind_)) {
            if (!(u->a >= 0) || !(u->a < u->b) || !std::isfinite(u->b))
                throw std::invalid_argument("uniform gap needs 0 <= a < b");
        }
    }

    /// Canonical text form: `const:1`, `exp:1.0`, `unif:0.5,1.5`, `delta1`.
    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        if (auto c = std::get_if<ConstantGap>(&kind_))
            os << "const:" << ballistic::to_string(c->d);
        else if (auto e = std::get_if<ExponentialGap>(&kind_))
            os << "exp:" << e->rate;
        else if (auto u = std::get_if<UniformGap>(&kind_))
            os << "unif:" << u->a << ',' << u->b;
        else
            os << "delta1";
        return os.str();
    }

    static InterdistanceSpec parse(std::string_view text)
    {
        std::string s(text);
        auto bad = [&]() { return std::invalid_argument("bad interdistance spec: '" + s + "'"); };
        if (s == "delta1")
            return delta1();
        auto colon = s.find(':');
        if (colon == std::string::npos)
            throw bad();
        std::string head = s.substr(0, colon), body = s.substr(colon + 1);
        try {
            if (head == "const")
                return constant(parse_rational(body));
            if (head == "exp")
                return exponential(parse_double(body));
            if (head == "unif") {
                auto comma = body.find(',');
                if (comma == std::string::npos)
                    throw bad();
                return uniform(parse_double(body.substr(0, comma)), parse_double(body.substr(comma + 1)));
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string(e.what()) + " in '" + s + "'");
        }
        throw bad();
    }

private:
    static double parse_double(const std::string& s)
    {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::logic_error&) {
            throw std::invalid_argument("not a number: '" + s + "'");
        }
        if (used != s.size())
            throw std::invalid_argument("not a number: '" + s + "'");
        return v;
    }

    Kind kind_;
};

struct ModelParams {
    Rational p{1, 4};
    CollisionRule rule = CollisionRule::Spin;

    void validate() const
    {
        if (p < 0 || p > 1)
            throw std::invalid_argument("p must lie in [0,1]");
    }
};

// ---------------------------------------------------------------------------
// Seeds and draws

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for replica `r` of a run with base seed `seed`: mix64(seed ^ mix64(r)).
constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t r)
{
    return mix64(seed ^ mix64(r + 0x632be59bd9b4e019ULL));
}

/// Draws velocities and spins from a fixed p with an exact integer threshold:
/// a 64-bit word u gives a static particle iff u < p * 2^64.
class VelocitySampler {
public:
    explicit VelocitySampler(const Rational& p)
    {
        if (p < 0 || p > 1)
            throw std::invalid_argument("p must lie in [0,1]");
        all_static_ = p == 1;
        if (!all_static_) {
            Integer scaled = Integer(p.get_num() << 64) / p.get_den();
            threshold_ = static_cast<std::uint64_t>(mpz_get_ui(Integer(scaled >> 32).get_mpz_t())) << 32
                       | static_cast<std::uint64_t>(mpz_get_ui(Integer(scaled & 0xffffffffUL).get_mpz_t()));
        }
    }

    template <class Engine>
    Velocity velocity(Engine& rng) const
    {
        std::uint64_t u = rng();
        if (all_static_ || u < threshold_)
            return Velocity::Static;
        return (rng() >> 63) ? Velocity::Right : Velocity::Left;
    }

    template <class Engine>
    static Spin spin(Engine& rng) { return (rng() >> 63) ? Spin::Up : Spin::Down; }

private:
    bool all_static_ = false;
    std::uint64_t threshold_ = 0;
};

/// Uniform on (0,1), an odd multiple of 2^-54, never 0 or 1.
template <class Engine>
double open_unit(Engine& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class Engine>
double draw_continuous_gap(const InterdistanceSpec& spec, Engine& rng)
{
    if (auto e = std::get_if<ExponentialGap>(&spec.kind()))
        return -std::log(open_unit(rng)) / e->rate;
    auto u = std::get<UniformGap>(spec.kind());
    return u.a + (u.b - u.a) * open_unit(rng);
}

// ---------------------------------------------------------------------------
// Coordinate policies

/// Fixed-point coordinate: one tick is 2^-64 length units.
using Tick = __int128;
inline constexpr int tick_bits = 64;

template <class Coord>
struct CoordPolicy;

template <>
struct CoordPolicy<Rational> {
    static Rational unit_for(const InterdistanceSpec&) { return Rational(1); }
    template <class Engine>
    static Rational gap(const InterdistanceSpec& spec, Engine& rng)
    {
        if (spec.is_continuous())
            return Rational(draw_continuous_gap(spec, rng)); // exact binary value of the double
        return spec.constant_gap();
    }
};

template <>
struct CoordPolicy<std::int64_t> {
    static Rational unit_for(const InterdistanceSpec& spec)
    {
        if (spec.is_continuous())
            throw std::invalid_argument("integer coordinates need a constant interdistance law");
        return Rational(Integer(1), spec.constant_gap().get_den());
    }
    template <class Engine>
    static std::int64_t gap(const InterdistanceSpec& spec, Engine&)
    {
        return mpz_get_si(spec.constant_gap().get_num_mpz_t());
    }
};

template <>
struct CoordPolicy<Tick> {
    static Rational unit_for(const InterdistanceSpec& spec)
    {
        if (spec.is_continuous()) {
            Integer den(1);
            den <<= tick_bits;
            return Rational(Integer(1), den);
        }
        return Rational(Integer(1), spec.constant_gap().get_den());
    }
    template <class Engine>
    static Tick gap(const InterdistanceSpec& spec, Engine& rng)
    {
        if (!spec.is_continuous())
            return static_cast<Tick>(mpz_get_si(spec.constant_gap().get_num_mpz_t()));
        double x = std::ldexp(draw_continuous_gap(spec, rng), tick_bits);
        // exact for gaps >= 2^-11; smaller gaps round to the tick grid
        Tick t = static_cast<Tick>(std::nearbyint(x));
        return t < 1 ? Tick(1) : t;
    }
};

/// Half-line sample: particles 1..n at partial sums of i.i.d. gaps, origin 0.
template <class Coord = Rational>
Configuration<Coord> sample_config(long n, const InterdistanceSpec& spec, const ModelParams& params,
                                   std::uint64_t seed)
{
    if (n < 1)
        throw std::invalid_argument("sample_config needs n >= 1");
    spec.validate();
    params.validate();
    std::mt19937_64 rng(mix64(seed));
    VelocitySampler vs(params.p);
    Configuration<Coord> c;
    c.unit = CoordPolicy<Coord>::unit_for(spec);
    c.origin = Coord(0);
    c.provenance = spec.to_string() + " seed=" + std::to_string(seed);
    c.particles.resize(static_cast<std::size_t>(n));
    Coord x(0);
    for (long k = 0; k < n; ++k) {
        x += CoordPolicy<Coord>::gap(spec, rng);
        auto& p = c.particles[static_cast<std::size_t>(k)];
        p.index = k + 1;
        p.x = x;
        p.v = vs.velocity(rng);
        p.s = VelocitySampler::spin(rng);
    }
    return c;
}

/// Full-line window: index 0 at the origin, indices 1..n_right to the right and
/// -1..-n_left to the left, each side an independent renewal sequence.
template <class Coord = Rational>
Configuration<Coord> sample_full_line_window(long n_left, long n_right, const InterdistanceSpec& spec,
                                             const ModelParams& params, std::uint64_t seed,
                                             bool force_static_center = false)
{
    if (n_left < 1 || n_right < 1)
        throw std::invalid_argument("full-line window needs n_left, n_right >= 1");
    spec.validate();
    params.validate();
    std::mt19937_64 rng(mix64(seed));
    VelocitySampler vs(params.p);
    Configuration<Coord> c;
    c.unit = CoordPolicy<Coord>::unit_for(spec);
    c.origin = Coord(0);
    c.provenance = spec.to_string() + " window seed=" + std::to_string(seed);
    const auto nl = static_cast<std::size_t>(n_left), nr = static_cast<std::size_t>(n_right);
    c.particles.resize(nl + nr + 1);

    auto& center = c.particles[nl];
    center.index = 0;
    center.x = Coord(0);
    center.v = vs.velocity(rng);
    center.s = VelocitySampler::spin(rng);
    if (force_static_center)
        center.v = Velocity::Static;

    Coord x(0);
    for (std::size_t k = 1; k <= nr; ++k) {
        x += CoordPolicy<Coord>::gap(spec, rng);
        auto& p = c.particles[nl + k];
        p.index = static_cast<long>(k);
        p.x = x;
        p.v = vs.velocity(rng);
        p.s = VelocitySampler::spin(rng);
    }
    x = Coord(0);
    for (std::size_t k = 1; k <= nl; ++k) {
        x -= CoordPolicy<Coord>::gap(spec, rng);
        auto& p = c.particles[nl - k];
        p.index = -static_cast<long>(k);
        p.x = x;
        p.v = vs.velocity(rng);
        p.s = VelocitySampler::spin(rng);
    }
    return c;
}

template <class Coord>
Configuration<Rational> to_rational_config(const Configuration<Coord>& c)
{
    Configuration<Rational> r;
    r.unit = 1;
    r.origin = to_rational(c.origin) * c.unit;
    r.provenance = c.provenance;
    r.particles.reserve(c.particles.size());
    for (const auto& p : c.particles)
        r.particles.push_back({p.index, to_rational(p.x) * c.unit, p.v, p.s});
    return r;
}

} // namespace ballistic
