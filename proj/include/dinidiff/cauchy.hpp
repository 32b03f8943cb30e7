#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "errors.hpp"
#include "rational.hpp"

namespace dini {

/// Round x to the nearest multiple of 2^{-n} (ties away from zero).
inline Rat round_to_dyadic(const Rat& x, unsigned n) {
    Int scale = pow_int(2, n);
    Rat scaled = x * scale;
    Int two_num = 2 * numerator(scaled);
    Int den = denominator(scaled);
    Int i = two_num >= 0 ? Int((two_num + den) / (2 * den)) : Int((two_num - den) / (2 * den));
    return Rat(i, scale);
}

/// A lazily evaluable rational sequence (q_n) naming a real x with |x - q_n| <= 2^{-n}
/// and |q_n - q_{n-1}| <= 2^{-n}. Evaluators are pure; the memo cache is transparent.
class CauchyName {
public:
    CauchyName() = default;
    CauchyName(std::function<Rat(unsigned)> eval, std::string label = {})
        : eval_(std::move(eval)),
          label_(std::move(label)),
          cache_(std::make_shared<Cache>()) {}

    Rat approx(unsigned n) const {
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto it = cache_->memo.find(n);
        if (it != cache_->memo.end()) return it->second;
        Rat v = eval_(n);
        cache_->memo.emplace(n, v);
        return v;
    }

    const std::string& label() const { return label_; }

    /// The rounded-dyadic name q_n = round(x * 2^n) / 2^n of an exact rational.
    static CauchyName of_rational(const Rat& x, std::string label = {}) {
        return CauchyName([x](unsigned n) { return round_to_dyadic(x, n); }, std::move(label));
    }

    /// Constant name q_n = x (valid: all steps are 0).
    static CauchyName constant(const Rat& x, std::string label = {}) {
        return CauchyName([x](unsigned) { return x; }, std::move(label));
    }

    /// Wrap a "tight" approximator t with |x - t(m)| <= 2^{-m}: re-index q_n = t(n+2)
    /// so both the error bound and the step bound hold.
    static CauchyName from_tight(std::function<Rat(unsigned)> t, std::string label = {}) {
        return CauchyName([t = std::move(t)](unsigned n) { return t(n + 2); },
                          std::move(label));
    }

private:
    struct Cache {
        std::mutex mu;
        std::map<unsigned, Rat> memo;
    };
    std::function<Rat(unsigned)> eval_;
    std::string label_;
    std::shared_ptr<Cache> cache_;
};

// ---- Arithmetic lifts (precision bookkeeping only) -------------------------

inline CauchyName lift_add(const CauchyName& x, const CauchyName& y) {
    return CauchyName::from_tight(
        [x, y](unsigned m) { return x.approx(m + 1) + y.approx(m + 1); });
}

inline CauchyName lift_neg(const CauchyName& x) {
    return CauchyName([x](unsigned n) { return Rat(-x.approx(n)); });
}

inline CauchyName lift_sub(const CauchyName& x, const CauchyName& y) {
    return lift_add(x, lift_neg(y));
}

inline CauchyName lift_scale(const Rat& c, const CauchyName& x) {
    unsigned s = 0;
    while (pow2(static_cast<int>(s)) < rat_abs(c)) ++s;
    return CauchyName::from_tight([c, x, s](unsigned m) { return c * x.approx(m + s); });
}

inline CauchyName lift_mul(const CauchyName& x, const CauchyName& y) {
    // |x|, |y| bounded via the 0-th approximations.
    Rat bx = rat_abs(x.approx(0)) + 1;
    Rat by = rat_abs(y.approx(0)) + 2;
    unsigned s = 0;
    while (pow2(static_cast<int>(s)) < bx + by) ++s;
    return CauchyName::from_tight(
        [x, y, s](unsigned m) { return x.approx(m + s) * y.approx(m + s); });
}

/// Name of sqrt(1/2) by exact dyadic bisection: largest d = i*2^{-m-1} with d^2 <= 1/2.
inline CauchyName sqrt2_half_name() {
    return CauchyName::from_tight(
        [](unsigned m) {
            unsigned t = m + 1;
            Int lo = 0, hi = pow_int(2, t);  // d in [0, 1]
            Int scale2 = pow_int(2, 2 * t);
            while (hi - lo > 1) {
                Int mid = (lo + hi) / 2;
                if (2 * mid * mid <= scale2)
                    lo = mid;
                else
                    hi = mid;
            }
            return Rat(lo, pow_int(2, t));
        },
        "sqrt2half");
}

/// First n bits of the binary Champernowne sequence: binary expansions of 0,1,2,...
/// concatenated (0, 1, 10, 11, 100, ...).
inline std::string champernowne2_bits(unsigned n) {
    std::string out;
    for (Int v = 0; out.size() < n; ++v) {
        std::string bits;
        if (v == 0) {
            bits = "0";
        } else {
            for (Int w = v; w > 0; w >>= 1) bits.insert(bits.begin(), char('0' + int(w & 1)));
        }
        out += bits;
    }
    out.resize(n);
    return out;
}

inline CauchyName champernowne2_name() {
    return CauchyName(
        [](unsigned n) {
            std::string bits = champernowne2_bits(n);
            Int i = 0;
            for (char c : bits) i = 2 * i + (c - '0');
            return Rat(i, pow_int(2, n));
        },
        "champernowne2");
}

// ---- Binary expansion with an explicit separation witness -------------------

/// First n binary digits of x (infinitely-many-0s convention). The caller certifies
/// the scaled separation |x - i*2^{-m}| >= sep * 2^{-m} for all m <= n; the evaluation
/// precision derived from sep either confirms the digits or reveals a violation.
inline std::string binary_expansion_prefix(const CauchyName& x, unsigned n, const Rat& sep) {
    if (sep <= 0) throw PreconditionViolated("separation bound must be positive");
    unsigned p = n;
    Rat need = sep * pow2_neg(n) / 2;
    while (pow2_neg(p) > need) ++p;
    Rat q = x.approx(p);
    for (unsigned m = 1; m <= n; ++m) {
        Rat d = round_to_dyadic(q, m);
        if (rat_abs(q - d) < sep * pow2_neg(m) - pow2_neg(p))
            throw SeparationViolated("x within " + rat_str(sep) + "*2^-" + std::to_string(m) +
                                     " of dyadic " + rat_str(d));
    }
    Int i = rat_floor(q * pow_int(2, n));
    std::string bits(n, '0');
    for (unsigned b = 0; b < n; ++b)
        if (boost::multiprecision::bit_test(i, n - 1 - b)) bits[b] = '1';
    return bits;
}

/// Scaled separation of a rational x from all dyadics of depth <= n:
/// min over m <= n of dist(x, 2^{-m} Z) * 2^m. Used as an oracle to build witnesses.
inline Rat dyadic_separation(const Rat& x, unsigned n) {
    Rat best = 2;
    for (unsigned m = 0; m <= n; ++m) {
        Rat d = round_to_dyadic(x, m);
        Rat s = rat_abs(x - d) * pow_int(2, m);
        if (s < best) best = s;
    }
    return best;
}

}  // namespace dini
