#pragma once

#include <string>
#include <utility>
#include <vector>

#include "correspondence.hpp"
#include "errors.hpp"
#include "martingale.hpp"
#include "ratfn.hpp"
#include "rational.hpp"
#include "sawtooth.hpp"

namespace dini {

/// Finite mixture g = f + sum_{1 <= k <= k0} 2^{-k} g_k with the geometric tail
/// 2^{-k0} * sup recorded separately. Each g_k must be exact and nondecreasing.
struct Mixture {
    MonotoneFn g;
    Rat tail_bound;
};

inline Mixture mix_functions(const MonotoneFn& f, const std::vector<MonotoneFn>& g_list,
                             unsigned k0, const Rat& sup_bound = Rat(1)) {
    if (!f.exact()) throw PreconditionViolated("mixture base must be exact");
    std::vector<MonotoneFn> kept;
    for (const auto& g : g_list) {
        if (!g.exact() || !g.monotone())
            throw PreconditionViolated("mixture terms must be exact and nondecreasing");
        if (kept.size() >= k0) break;
        kept.push_back(g);
    }
    Mixture mix;
    mix.tail_bound = pow2_neg(k0) * sup_bound;
    mix.g = MonotoneFn(
        [f, kept](const Rat& q, unsigned) {
            Rat v = f.value(q);
            for (size_t k = 0; k < kept.size(); ++k)
                v += pow2_neg(static_cast<unsigned>(k + 1)) * kept[k].value(q);
            return v;
        },
        true, f.monotone(), 0, "mixture");
    return mix;
}

/// x -> integral over [0, x] of Lambda_{(a,b),p}: a nondecreasing piecewise-quadratic
/// ramp, exact at every rational.
inline MonotoneFn sawtooth_integral(const Rat& a, const Rat& b, const Rat& p) {
    Rat mid = (a + b) / 2;
    Rat half_area = p * (b - a) * (b - a) / 8;  // integral over one half
    return MonotoneFn::exact_fn(
        [a, b, p, mid, half_area](const Rat& x) {
            if (x <= a) return Rat(0);
            if (x <= mid) return Rat(p * (x - a) * (x - a) / 2);
            if (x < b) return Rat(2 * half_area - p * (b - x) * (b - x) / 2);
            return Rat(2 * half_area);
        },
        "ramp", true);
}

/// One step of the bit-by-bit diagonalization.
struct DiagonalStep {
    unsigned n = 0;           // index of the chosen bit
    int bit = 0;
    Rat chosen, rejected;     // approximations at precision n + 3
    Rat value;                // approx V(Z restricted to n + 1)
};

struct DiagonalTrace {
    std::string Z;
    Rat v_prefix;  // V at the fixed prefix 100
    std::vector<DiagonalStep> steps;
};

/// Diagonalization: grow Z (fixed prefix 100) by always taking a bit b whose approximate
/// value does not exceed the sibling's by more than 2^{-n-1}; two approximations
/// within 2^{-n-3} then certify V(Z|n+1) <= V(Z|n) + 2^{-n-1}, so the whole trace
/// stays below V(100) + 1/4. Ties prefer bit 0.
inline DiagonalTrace diagonalize(const Martingale& V, unsigned depth) {
    if (V.base() != 2) throw PreconditionViolated("diagonalization runs on base-2 martingales");
    if (depth < 3) throw PreconditionViolated("depth must cover the fixed prefix 100");
    DiagonalTrace tr;
    tr.Z = "100";
    DigitString sigma = DigitString::parse(2, "100");
    tr.v_prefix = V.eval(sigma, 3 + 3);
    for (unsigned n = 3; n < depth; ++n) {
        unsigned p = n + 3;
        Rat v0 = V.eval(sigma.child(0), p);
        Rat v1 = V.eval(sigma.child(1), p);
        int b = v0 <= v1 + pow2_neg(n + 1) ? 0 : 1;
        DiagonalStep st;
        st.n = n;
        st.bit = b;
        st.chosen = b == 0 ? v0 : v1;
        st.rejected = b == 0 ? v1 : v0;
        // the selection rule is certified: losing both ways would break fairness
        if (b == 1 && !(v1 <= v0 + pow2_neg(n + 1)))
            throw PrecisionUnavailable("neither child certifiable at step " + std::to_string(n));
        sigma = sigma.child(b);
        tr.Z.push_back(char('0' + b));
        st.value = st.chosen;
        tr.steps.push_back(std::move(st));
    }
    return tr;
}

/// Reduction to a base-2 martingale at a fixed interval placement: rescale the nondecreasing
/// h through r(x) = h(p x + q) - h(q), derive V = Mart(r) in base 2, diagonalize.
/// The (p,q) pair is exposed; the identity placement is the default since a
/// sup-based search over placements is not decidable at finite depth.
inline Martingale reduction_martingale(const MonotoneFn& h, const Rat& p = Rat(1),
                                       const Rat& q = Rat(0),
                                       const std::vector<MonotoneFn>& g_list = {},
                                       unsigned k0 = 8) {
    if (!h.exact()) throw PreconditionViolated("need exact values on rationals");
    if (!(p > 0) || q < 0 || p + q > 1) throw PreconditionViolated("placement must stay in [0,1]");
    Mixture mix = mix_functions(h, g_list, k0);
    MonotoneFn g = mix.g;
    MonotoneFn r(
        [g, p, q](const Rat& x, unsigned) { return g.value(p * x + q) - g.value(q); }, true,
        g.monotone(), 0, "rescaled");
    return mart(r, 2);
}

inline DiagonalTrace differentiability_point(const MonotoneFn& h, unsigned depth,
                                             const Rat& p = Rat(1), const Rat& q = Rat(0),
                                             const std::vector<MonotoneFn>& g_list = {},
                                             unsigned k0 = 8) {
    return diagonalize(reduction_martingale(h, p, q, g_list, k0), depth);
}

}  // namespace dini
