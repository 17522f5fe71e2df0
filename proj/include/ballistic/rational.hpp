#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ballistic {

using Rational = mpq_class;
using Integer = mpz_class;

/// n/d in canonical form (the two-argument mpq_class constructor does not reduce).
inline Rational ratio(long n, long d)
{
    Rational r(n, d);
    r.canonicalize();
    return r;
}

/// Parses `3`, `-1/4`, `0.3` (read as 3/10) or `2.5e-3` into an exact rational.
inline Rational parse_rational(std::string_view text)
{
    std::string s(text);
    auto fail = [&]() { throw std::invalid_argument("not a rational: '" + s + "'"); };
    if (s.empty())
        fail();

    if (s.find('/') != std::string::npos) {
        Rational r;
        if (r.set_str(s, 10) != 0)
            fail();
        if (r.get_den() == 0)
            fail();
        r.canonicalize();
        return r;
    }

    std::string mantissa = s;
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        mantissa = s.substr(0, e);
        try {
            std::size_t used = 0;
            exponent = std::stol(s.substr(e + 1), &used);
            if (used != s.size() - e - 1)
                fail();
        } catch (const std::logic_error&) {
            fail();
        }
    }
    bool negative = false;
    if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
        negative = mantissa[0] == '-';
        mantissa.erase(0, 1);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    for (char c : mantissa) {
        if (c == '.') {
            if (seen_point)
                fail();
            seen_point = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_point)
                ++frac_digits;
        } else {
            fail();
        }
    }
    if (digits.empty())
        fail();
    Integer num(digits, 10);
    long scale = exponent - frac_digits;
    Integer ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    Rational r = scale >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
    r.canonicalize();
    return negative ? Rational(-r) : r;
}

/// `num/den`, or just `num` for integers.
inline std::string to_string(const Rational& r)
{
    return r.get_str(10);
}

inline double to_double(const Rational& r)
{
    return r.get_d();
}

/// r/2, canonical. (gmpxx's mixed division by an integer can skip the gcd step.)
inline Rational halve(const Rational& r)
{
    Rational out;
    mpq_div_2exp(out.get_mpq_t(), r.get_mpq_t(), 1);
    return out;
}

inline Rational from_int128(__int128 v)
{
    bool neg = v < 0;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
    Integer hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
    Integer lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
    Integer z = (hi << 64) + lo;
    return Rational(neg ? Integer(-z) : z);
}

inline Rational to_rational(std::int64_t v) { return Rational(Integer(static_cast<long>(v))); }
inline Rational to_rational(__int128 v) { return from_int128(v); }
inline const Rational& to_rational(const Rational& v) { return v; }

inline Rational rational_sqrt_exact(const Rational& r, bool& exact)
{
    Integer n = r.get_num(), d = r.get_den();
    Integer sn, sd;
    mpz_sqrt(sn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), d.get_mpz_t());
    exact = sn * sn == n && sd * sd == d;
    return Rational(sn, sd);
}

} // namespace ballistic
