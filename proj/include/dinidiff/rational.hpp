#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>

#include "errors.hpp"
#include <string>

namespace dini {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;  // always in lowest terms, den > 0

inline Int pow_int(unsigned base, unsigned exp) {
    Int r = 1;
    Int b = base;
    while (exp) {
        if (exp & 1u) r *= b;
        b *= b;
        exp >>= 1u;
    }
    return r;
}

/// 2^{-n} as an exact rational.
inline Rat pow2_neg(unsigned n) { return Rat(Int(1), pow_int(2, n)); }

inline Rat pow2(int n) {
    return n >= 0 ? Rat(pow_int(2, static_cast<unsigned>(n))) : pow2_neg(static_cast<unsigned>(-n));
}

inline Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

/// floor(x) as a big integer (round toward -inf).
inline Int rat_floor(const Rat& x) {
    Int q = numerator(x) / denominator(x);
    if (x < 0 && q * denominator(x) != numerator(x)) --q;
    return q;
}

inline Int rat_ceil(const Rat& x) {
    Int q = numerator(x) / denominator(x);
    if (x > 0 && q * denominator(x) != numerator(x)) ++q;
    return q;
}

/// A dyadic rational i * 2^{-n} in canonical form (mantissa odd or zero, unless n == 0).
struct Dyadic {
    Int mantissa;
    unsigned exponent = 0;

    Dyadic() : mantissa(0) {}
    Dyadic(Int i, unsigned n) : mantissa(std::move(i)), exponent(n) { canonicalize(); }

    void canonicalize() {
        if (mantissa == 0) {
            exponent = 0;
            return;
        }
        while (exponent > 0 && (mantissa & 1) == 0) {
            mantissa >>= 1;
            --exponent;
        }
    }

    Rat value() const { return Rat(mantissa, pow_int(2, exponent)); }

    /// Exact conversion; throws if q is not dyadic.
    static Dyadic from_rational(const Rat& q) {
        Int den = denominator(q);
        unsigned n = 0;
        while ((den & 1) == 0) {
            den >>= 1;
            ++n;
        }
        if (den != 1) throw std::invalid_argument("not a dyadic rational: " + to_string(q));
        return Dyadic(numerator(q), n);
    }

    static bool is_dyadic(const Rat& q) {
        Int den = denominator(q);
        while ((den & 1) == 0) den >>= 1;
        return den == 1;
    }

    static std::string to_string(const Rat& q) {
        return numerator(q).str() + "/" + denominator(q).str();
    }
};

/// Parse "num/den" or "i/2^n" or a plain integer; exact, no floats.
inline Rat parse_rational(const std::string& s) {
    auto bad = [&] { return UsageError("malformed rational: '" + s + "'"); };
    if (s.empty()) throw bad();
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rat(Int(s));
        Int num(s.substr(0, slash));
        std::string den_s = s.substr(slash + 1);
        Int den;
        if (den_s.rfind("2^", 0) == 0)
            den = pow_int(2, static_cast<unsigned>(std::stoul(den_s.substr(2))));
        else
            den = Int(den_s);
        if (den <= 0) throw bad();
        return Rat(num, den);
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw bad();
    }
}

inline std::string rat_str(const Rat& q) {
    if (denominator(q) == 1) return numerator(q).str();
    return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace dini
