#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "budget.hpp"
#include "errors.hpp"
#include "martingale.hpp"
#include "ratfn.hpp"
#include "rational.hpp"

namespace dini {

/// Certified growth bound B with M(sigma) <= B(|sigma|) and B(n) k^{-n} -> 0.
using GrowthBound = std::function<Rat(unsigned)>;

/// The bound 2n + M(<>) available for martingales with the savings property.
inline GrowthBound savings_bound(const Martingale& M) {
    Rat m0 = M.initial();
    return [m0](unsigned n) { return Rat(2 * n) + m0; };
}

/// Base-k digits of q = i * k^{-n} at the minimal such depth, or nullopt when q is
/// not a base-k grid point. Requires 0 <= q <= 1.
inline std::optional<std::vector<int>> grid_digits(const Rat& q, int k) {
    Int den = denominator(q);
    unsigned n = 0;
    while (den > 1) {
        Int g = gcd(den, Int(k));
        if (g == 1) return std::nullopt;
        den /= g;
        ++n;
    }
    Int i = numerator(q) * pow_int(static_cast<unsigned>(k), n) / denominator(q);
    std::vector<int> digits(n, 0);
    for (unsigned j = n; j-- > 0;) {
        digits[j] = static_cast<int>(i % k);
        i /= k;
    }
    return digits;
}

/// mu_M[0, 0.sigma): decompose the interval along sigma's digits; O(|sigma| * k)
/// martingale evaluations, exact for exact M.
inline Rat measure_below(const Martingale& M, const std::vector<int>& digits) {
    int k = M.base();
    Rat mass = 0;
    Rat scale = 1;
    DigitString prefix(k, {});
    for (int d : digits) {
        scale /= k;
        for (int b = 0; b < d; ++b) mass += scale * M.eval(prefix.child(b));
        prefix.digits.push_back(d);
    }
    return mass;
}

/// Fcn(M)(x) = mu_M[0, x). Exact at base-k grid points. Off-grid values bracket
/// between grid points at depth n with B(n) k^{-n} <= 2^{-p}; B certifies
/// atomlessness at the resolutions used. Martingales known to be constant below a
/// depth get exact off-grid values (uniform density inside deep cells).
inline MonotoneFn fcn(const Martingale& M, GrowthBound B) {
    int k = M.base();
    auto eval = [M, B, k](const Rat& q, unsigned p) -> Rat {
        if (q <= 0) return Rat(0);
        if (q >= 1) return M.initial();
        if (auto dg = grid_digits(q, k)) return measure_below(M, *dg);
        if (auto d = M.constant_below()) {
            Rat kd = Rat(pow_int(static_cast<unsigned>(k), *d));
            Int i = rat_floor(q * kd);
            Rat a(i, pow_int(static_cast<unsigned>(k), *d));
            auto dg = grid_digits(a, k).value();
            dg.resize(*d, 0);  // pad back to depth d after reduction
            return measure_below(M, dg) + M.eval(DigitString(k, dg)) * (q - a);
        }
        if (!B) throw NoAtomlessnessCertificate("off-grid evaluation requires a growth bound");
        unsigned n = 1;
        Rat kn = k;
        Rat target = pow2_neg(p);
        while (B(n) > target * kn) {
            ++n;
            kn *= k;
            if (Rat(n) * k > Rat(Int(enumeration_budget())))
                throw BudgetExceeded("bracketing depth " + std::to_string(n) +
                                     " exceeds enumeration budget");
        }
        Int i = rat_floor(q * kn);
        Rat a(i, pow_int(static_cast<unsigned>(k), n));
        auto dg = grid_digits(a, k).value();
        dg.resize(n, 0);
        return measure_below(M, dg);
    };
    bool exact = M.exact();
    return MonotoneFn(std::move(eval), exact, true, M.constant_below() ? 0 : k,
                      "fcn " + M.label());
}

/// Grid-only variant: exact at base-k grid points, NoAtomlessnessCertificate off-grid.
inline MonotoneFn fcn(const Martingale& M) { return fcn(M, GrowthBound{}); }

/// Mart^k(f)(sigma) = (f(0.sigma + k^{-n}) - f(0.sigma)) * k^n.
inline Martingale mart(const MonotoneFn& f, int k) {
    auto eval = [f, k](const DigitString& s, unsigned p) -> Rat {
        unsigned n = static_cast<unsigned>(s.size());
        Int kn = pow_int(static_cast<unsigned>(k), n);
        Rat a = s.left_endpoint();
        Rat len(Int(1), kn);
        unsigned pf = 0;
        if (!f.exact()) {
            // two f errors of 2^{-pf}, scaled by k^n, must fit in 2^{-p}
            pf = p + 1 + (kn == 1 ? 0u : static_cast<unsigned>(msb(kn)) + 1u);
        }
        return (f.value(a + len, pf) - f.value(a, pf)) / len;
    };
    return Martingale(k, std::move(eval), f.exact(), "mart " + f.label());
}

// ---- Round trips ---------------------------------------------------------------

struct RoundtripMismatch {
    std::string where;
    Rat got;
    Rat want;
};

struct RoundtripReport {
    unsigned depth = 0;
    unsigned long long checked = 0;
    std::vector<RoundtripMismatch> mismatches;
    bool ok() const { return mismatches.empty(); }
};

/// Mart(Fcn(M)) = M on all strings of length <= depth (exact comparison).
inline RoundtripReport roundtrip_check(const Martingale& M, unsigned depth,
                                       GrowthBound B = GrowthBound{}) {
    if (!M.exact()) throw NotExact("round trip requires an exact martingale");
    Martingale N = mart(fcn(M, std::move(B)), M.base());
    RoundtripReport rep;
    rep.depth = depth;
    int k = M.base();
    std::vector<DigitString> level{DigitString(k, {})};
    for (unsigned n = 0; n <= depth; ++n) {
        std::vector<DigitString> next;
        for (auto& s : level) {
            Rat got = N.eval(s);
            Rat want = M.eval(s);
            ++rep.checked;
            if (got != want) rep.mismatches.push_back({s.str(), got, want});
            if (n < depth)
                for (int b = 0; b < k; ++b) next.push_back(s.child(b));
        }
        level = std::move(next);
    }
    return rep;
}

/// Fcn(Mart(f)) = f on all grid points i * k^{-n}, n <= depth; requires f(0) = 0.
inline RoundtripReport roundtrip_check_f(const MonotoneFn& f, int k, unsigned depth) {
    if (!f.exact()) throw NotExact("round trip requires an exact function");
    RoundtripReport rep;
    rep.depth = depth;
    Rat f0 = f.value(Rat(0));
    if (f0 != 0) {
        rep.mismatches.push_back({"f(0)", f0, Rat(0)});
        return rep;
    }
    MonotoneFn g = fcn(mart(f, k));
    Int kn = pow_int(static_cast<unsigned>(k), depth);
    for (Int i = 0; i <= kn; ++i) {
        Rat q(i, kn);
        Rat got = g.value(q);
        Rat want = f.value(q);
        ++rep.checked;
        if (got != want) rep.mismatches.push_back({rat_str(q), got, want});
    }
    return rep;
}

// ---- Base conversion -------------------------------------------------------------

struct BaseConversion {
    Martingale result;
    unsigned truncation_depth = 0;
    /// |ideal node value - returned value| <= error_bound * k^{|sigma|} at each node;
    /// zero when the source measure is uniform below some depth.
    Rat error_bound;
};

/// N = Mart^k(Fcn(M)) for a base-r exact martingale M with the savings property.
/// Fcn(M) is evaluated at base-k rationals by truncating the base-r decomposition of
/// [0, q) at depth D; the truncated function is still a fixed nondecreasing function,
/// so N is exactly fair and nonnegative in its own right, with the conversion error
/// against the ideal N bounded by B(D) r^{-D} per function value.
inline BaseConversion base_convert(const Martingale& M, int k, unsigned D = 24) {
    if (!M.exact()) throw NotExact("base conversion requires an exact martingale");
    int r = M.base();
    GrowthBound B = savings_bound(M);
    MonotoneFn f = fcn(M, B);
    BaseConversion out;
    if (M.constant_below()) {
        out.result = mart(f, k);
        out.error_bound = 0;
        return out;
    }
    Int rD = pow_int(static_cast<unsigned>(r), D);
    MonotoneFn fhat(
        [f, rD](const Rat& q, unsigned) {
            if (q <= 0) return Rat(0);
            if (q >= 1) return f.value(Rat(1));
            return f.value(Rat(rat_floor(q * rD), rD));
        },
        true, true, 0, "fcn " + M.label() + " @depth " + std::to_string(D));
    out.result = mart(fhat, k);
    out.truncation_depth = D;
    out.error_bound = B(D) / rD;
    return out;
}

}  // namespace dini
