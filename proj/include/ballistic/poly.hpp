#pragma once

#include "ballistic/rational.hpp"

#include <algorithm>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ballistic {

/// Polynomial in p with exact rational coefficients, lowest degree first.
class PolyRat {
public:
    PolyRat() = default;
    PolyRat(const Rational& c) : c_{c} { trim(); }
    PolyRat(std::initializer_list<Rational> cs) : c_(cs) { trim(); }
    explicit PolyRat(std::vector<Rational> cs) : c_(std::move(cs)) { trim(); }

    static PolyRat p() { return PolyRat({Rational(0), Rational(1)}); }
    /// (1 - p) / 2
    static PolyRat pbar() { return PolyRat({Rational(1, 2), Rational(-1, 2)}); }

    const std::vector<Rational>& coefficients() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    long degree() const { return static_cast<long>(c_.size()) - 1; }

    Rational coefficient(std::size_t k) const { return k < c_.size() ? c_[k] : Rational(0); }

    Rational operator()(const Rational& x) const
    {
        Rational acc = 0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            acc = acc * x + *it;
        return acc;
    }

    double eval(double x) const
    {
        double acc = 0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            acc = acc * x + it->get_d();
        return acc;
    }

    /// Sign of the value at x, computed exactly.
    int sign_at(const Rational& x) const { return sgn((*this)(x)); }

    PolyRat& operator+=(const PolyRat& o)
    {
        if (o.c_.size() > c_.size())
            c_.resize(o.c_.size());
        for (std::size_t i = 0; i < o.c_.size(); ++i)
            c_[i] += o.c_[i];
        trim();
        return *this;
    }

    PolyRat& operator-=(const PolyRat& o)
    {
        if (o.c_.size() > c_.size())
            c_.resize(o.c_.size());
        for (std::size_t i = 0; i < o.c_.size(); ++i)
            c_[i] -= o.c_[i];
        trim();
        return *this;
    }

    PolyRat& operator*=(const Rational& s)
    {
        for (auto& c : c_)
            c *= s;
        trim();
        return *this;
    }

    friend PolyRat operator*(const PolyRat& a, const PolyRat& b)
    {
        if (a.is_zero() || b.is_zero())
            return {};
        std::vector<Rational> out(a.c_.size() + b.c_.size() - 1);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j)
                out[i + j] += a.c_[i] * b.c_[j];
        return PolyRat(std::move(out));
    }

    friend PolyRat operator+(PolyRat a, const PolyRat& b) { return a += b; }
    friend PolyRat operator-(PolyRat a, const PolyRat& b) { return a -= b; }
    friend PolyRat operator*(PolyRat a, const Rational& s) { return a *= s; }
    friend PolyRat operator*(const Rational& s, PolyRat a) { return a *= s; }
    friend bool operator==(const PolyRat& a, const PolyRat& b) { return a.c_ == b.c_; }

    PolyRat pow(unsigned k) const
    {
        PolyRat out(Rational(1)), base = *this;
        while (k) {
            if (k & 1)
                out = out * base;
            base = base * base;
            k >>= 1;
        }
        return out;
    }

    PolyRat derivative() const
    {
        std::vector<Rational> d;
        for (std::size_t k = 1; k < c_.size(); ++k)
            d.push_back(c_[k] * static_cast<long>(k));
        return PolyRat(std::move(d));
    }

    /// Remainder of the division by a nonzero divisor.
    friend PolyRat operator%(PolyRat a, const PolyRat& b)
    {
        if (b.is_zero())
            throw std::domain_error("polynomial division by zero");
        const std::size_t db = b.c_.size() - 1;
        while (a.c_.size() > db) {
            const std::size_t shift = a.c_.size() - 1 - db;
            const Rational f = a.c_.back() / b.c_.back();
            for (std::size_t i = 0; i <= db; ++i)
                a.c_[shift + i] -= f * b.c_[i];
            a.c_.back() = 0;
            a.trim();
        }
        return a;
    }

    /// `c0 + c1*p + c2*p^2`, coefficients as `num/den`.
    std::string to_string() const
    {
        if (c_.empty())
            return "0";
        std::string s;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            if (c_[k] == 0)
                continue;
            if (!s.empty())
                s += " + ";
            s += ballistic::to_string(c_[k]);
            if (k == 1)
                s += "*p";
            else if (k > 1)
                s += "*p^" + std::to_string(k);
        }
        return s;
    }

private:
    void trim()
    {
        for (auto& c : c_)
            c.canonicalize();
        while (!c_.empty() && c_.back() == 0)
            c_.pop_back();
    }

    std::vector<Rational> c_;
};

/// Sturm chain of f, each member scaled to a unit leading coefficient (which keeps signs).
inline std::vector<PolyRat> sturm_chain(const PolyRat& f)
{
    auto monic = [](PolyRat q) {
        if (!q.is_zero())
            q *= 1 / abs(q.coefficients().back());
        return q;
    };
    std::vector<PolyRat> chain{monic(f), monic(f.derivative())};
    while (!chain.back().is_zero() && chain.back().degree() > 0) {
        PolyRat r = chain[chain.size() - 2] % chain.back();
        if (r.is_zero())
            break;
        chain.push_back(monic(PolyRat() - r));
    }
    if (chain.back().is_zero())
        chain.pop_back();
    return chain;
}

inline int sign_variations(const std::vector<PolyRat>& chain, const Rational& x)
{
    int count = 0, last = 0;
    for (const auto& q : chain) {
        int s = q.sign_at(x);
        if (s == 0)
            continue;
        if (last != 0 && s != last)
            ++count;
        last = s;
    }
    return count;
}

/// Number of distinct real roots in (a, b]; needs f(a) != 0.
inline int count_roots(const std::vector<PolyRat>& chain, const Rational& a, const Rational& b)
{
    return sign_variations(chain, a) - sign_variations(chain, b);
}

} // namespace ballistic
