#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "ratfn.hpp"
#include "rational.hpp"

namespace dini {

/// The affine image p * [i 2^{-n}, (i+1) 2^{-n}] + q of a basic dyadic interval.
struct PQInterval {
    Rat p;  // positive scale
    Rat q;  // shift
    Int i;
    unsigned n = 0;

    Rat left() const { return p * Rat(i, pow_int(2, n)) + q; }
    Rat right() const { return p * Rat(i + 1, pow_int(2, n)) + q; }
    Rat length() const { return p * pow2_neg(n); }
};

/// The finite rational parameter set: k the smallest odd prime with 1 + 8/k < alpha,
/// P = {l/k : k/2 <= l <= k}, Q = {v/k : |v| <= k}, L = P u PQ.
struct LSet {
    Rat alpha;
    unsigned k = 0;
    std::vector<Rat> P, Q, L;
};

namespace detail {
inline bool is_prime(unsigned m) {
    if (m < 2) return false;
    for (unsigned d = 2; d * d <= m; ++d)
        if (m % d == 0) return false;
    return true;
}
}  // namespace detail

inline LSet build_L(const Rat& alpha) {
    if (alpha <= 1) throw PreconditionViolated("alpha must exceed 1");
    LSet s;
    s.alpha = alpha;
    unsigned k = 3;
    while (!(detail::is_prime(k) && Rat(1) + Rat(8, k) < alpha)) k += 2;
    s.k = k;
    for (unsigned l = (k + 1) / 2; l <= k; ++l) s.P.push_back(Rat(l, k));
    for (int v = -static_cast<int>(k); v <= static_cast<int>(k); ++v) s.Q.push_back(Rat(v, k));
    s.L = s.P;
    for (const Rat& p : s.P)
        for (const Rat& q : s.Q) s.L.push_back(p * q);
    std::sort(s.L.begin(), s.L.end());
    s.L.erase(std::unique(s.L.begin(), s.L.end()), s.L.end());
    return s;
}

/// Construction trace for an outer approximation, with its full inequality chain.
struct LIntervalWitness {
    unsigned n = 0;
    Rat eta;  // 1 / (2^n k)
    Rat p;
    Int M;
    Int i;
    Int v;
    PQInterval A;
    bool reflected = false;
    bool protrudes = false;  // A sticks out of [0,1]

    /// The inequality chain: y - x + eta < p 2^{-n} <= y - x + 2 eta; a < x, x - a <= eta.
    void validate(const Rat& x, const Rat& y, const Rat& alpha, unsigned k) const {
        Rat pn = p * pow2_neg(n);
        Rat a = A.left(), b = A.right();
        auto fail = [&](const std::string& what) {
            throw PropertyViolation("witness check failed for [" + rat_str(x) + "," + rat_str(y) +
                                    "]: " + what);
        };
        if (!(y - x + eta < pn)) fail("y-x+eta < p 2^-n");
        if (!(pn <= y - x + 2 * eta)) fail("p 2^-n <= y-x+2 eta");
        if (!(a < x)) fail("a < x");
        if (!(x - a <= eta)) fail("x - a <= eta");
        if (!(b > y)) fail("b > y");
        if (!(A.length() < alpha * (y - x))) fail("|A|/(y-x) < alpha");
        if (!(Rat(i, pow_int(2, n)) + Rat(v, k) == Rat(M) * eta)) fail("Bezout identity");
        if (!(rat_abs(Rat(v)) <= Rat(k))) fail("|v| <= k");
    }
};

namespace detail {
/// Inverse of odd k modulo 2^n.
inline Int inverse_mod_pow2(unsigned k, unsigned n) {
    Int mod = pow_int(2, n);
    if (mod == 1) return 0;
    // Newton iteration: x <- x (2 - k x) doubles correct bits
    Int x = 1;
    for (unsigned bits = 1; bits < n; bits *= 2) x = x * (2 - Int(k) * x) % mod;
    x %= mod;
    if (x < 0) x += mod;
    return x;
}

inline std::optional<LIntervalWitness> outer_attempt(const LSet& L, const Rat& x, const Rat& y) {
    unsigned k = L.k;
    Rat width = y - x;
    Rat factor = Rat(k - 1, k);
    // largest n with y - x < (1 - 1/k) 2^{-n}
    if (!(width < factor)) return std::nullopt;
    unsigned n = 0;
    while (width < factor * pow2_neg(n + 1)) ++n;
    Rat eta = Rat(Int(1), pow_int(2, n) * k);
    // least p in P with y - x + eta < p 2^{-n}
    Rat p;
    bool found = false;
    for (const Rat& cand : L.P)
        if (width + eta < cand * pow2_neg(n)) {
            p = cand;
            found = true;
            break;
        }
    if (!found) return std::nullopt;
    // greatest M with M eta < x / p
    Int M = rat_floor(x / (p * eta));
    if (Rat(M) * eta == x / p) M -= 1;
    if (M < 0) return std::nullopt;
    if (M >= pow_int(2, n) * k) return std::nullopt;  // would push |v| past k
    // Bezout: i k + v 2^n = M with 0 <= i < 2^n
    Int i = M * inverse_mod_pow2(k, n) % pow_int(2, n);
    if (i < 0) i += pow_int(2, n);
    Int v = (M - i * k) / pow_int(2, n);
    LIntervalWitness w;
    w.n = n;
    w.eta = eta;
    w.p = p;
    w.M = M;
    w.i = i;
    w.v = v;
    w.A = PQInterval{p, p * Rat(v, k), i, n};
    w.protrudes = w.A.left() < 0 || w.A.right() > 1;
    return w;
}
}  // namespace detail

/// Outer approximation: an L-interval A with [x,y] contained in A (strictly at
/// the left) and |A|/(y-x) < alpha. Works verbatim for 0 < x < y < 1/2; outside that
/// range, falls back to the reflected instance [1-y, 1-x] provided the reflected shift
/// still lies in L.
inline LIntervalWitness outer_approx(const LSet& L, const Rat& x, const Rat& y) {
    if (!(0 < x && x < y && y < 1)) throw PreconditionViolated("need 0 < x < y < 1");
    auto direct = detail::outer_attempt(L, x, y);
    if (direct) {
        try {
            direct->validate(x, y, L.alpha, L.k);
            return *direct;
        } catch (const PropertyViolation&) {
        }
    }
    auto refl = detail::outer_attempt(L, 1 - y, 1 - x);
    if (refl) {
        LIntervalWitness w = *refl;
        // reflect p[i 2^{-n}, (i+1) 2^{-n}] + q through t -> 1 - t, re-anchoring at i' = 0
        Rat new_left = 1 - w.A.right();
        PQInterval cand{w.A.p, new_left, 0, w.A.n};
        if (std::binary_search(L.L.begin(), L.L.end(), cand.q)) {
            w.A = cand;
            w.i = 0;
            w.reflected = true;
            w.protrudes = w.A.left() < 0 || w.A.right() > 1;
            // re-derive the chain facts on the reflected instance
            LIntervalWitness check = *refl;
            check.validate(1 - y, 1 - x, L.alpha, L.k);
            return w;
        }
        throw RangeUnsupported("reflected shift " + rat_str(cand.q) + " not in L");
    }
    throw RangeUnsupported("no admissible parameters for [" + rat_str(x) + "," + rat_str(y) + "]");
}

struct InnerResult {
    PQInterval B;
    LSet inner_L;  // built at precision 1 + eps
    LIntervalWitness witness;
    bool contains_z = false;
};

/// Inner approximation: an L-interval B inside [x,y] with (y-x)/|B| < alpha.
/// With alpha = 1 + 2 eps, applies the first statement at precision 1 + eps to [u,v]
/// where u - x = y - v = eps (v - u). When alpha < 4/3 and a point z in the middle
/// third of [x,y] is supplied, B contains z.
inline InnerResult inner_approx(const Rat& x, const Rat& y, const Rat& alpha,
                                const std::optional<Rat>& z = std::nullopt) {
    if (!(0 < x && x < y && y < 1)) throw PreconditionViolated("need 0 < x < y < 1");
    if (alpha <= 1) throw PreconditionViolated("alpha must exceed 1");
    Rat eps = (alpha - 1) / 2;
    Rat vu = (y - x) / (1 + 2 * eps);
    Rat u = x + eps * vu;
    Rat v = y - eps * vu;
    InnerResult res;
    res.inner_L = build_L(1 + eps);
    res.witness = outer_approx(res.inner_L, u, v);
    res.B = res.witness.A;
    if (!(x < res.B.left() && res.B.right() < y))
        throw PropertyViolation("inner interval escapes [x,y]");
    if (!((y - x) < alpha * res.B.length()))
        throw PropertyViolation("inner ratio bound failed");
    if (z) {
        if (!(x + (y - x) / 3 <= *z && *z <= y - (y - x) / 3))
            throw PreconditionViolated("z not in the middle third of [x,y]");
        res.contains_z = res.B.left() <= *z && *z <= res.B.right();
        if (alpha < Rat(4, 3) && !res.contains_z)
            throw PropertyViolation("middle-third point escaped B at alpha < 4/3");
    }
    return res;
}

// ---- slope-gap heuristic search -------------------------------------------------

struct PQPairCandidate {
    Rat p, q;  // betting family: empirical sup of S_f over (p,q)-intervals at finest h
    Rat r, s;  // coasting family: empirical inf
    Rat sup_slope;
    Rat inf_slope;
};

/// Finite search over L x L for interval families exhibiting a slope gap at z:
/// sup over (p,q)-intervals containing z above gammaT, inf over (r,s)-intervals
/// below betaT, measured at each h in the schedule. NotFound (nullopt) is a
/// legitimate outcome.
inline std::optional<PQPairCandidate> search_pqrs(const RationalFn& f, const Rat& z,
                                                  const Rat& betaT, const Rat& gammaT,
                                                  const LSet& L,
                                                  const std::vector<Rat>& h_schedule) {
    if (h_schedule.empty()) throw PreconditionViolated("empty resolution schedule");
    Rat h_min = *std::min_element(h_schedule.begin(), h_schedule.end());
    struct Rec {
        Rat p, q, sup, inf;
        bool any = false;
    };
    std::vector<Rec> recs;
    for (const Rat& p : L.L) {
        if (p <= 0) continue;
        for (const Rat& q : L.L) {
            Rec rec{p, q, 0, 0, false};
            for (const Rat& h : h_schedule) {
                if (h != h_min) continue;  // gap is judged at the finest resolution
                unsigned n = 0;
                while (p * pow2_neg(n) > h) ++n;
                Rat cell = p * pow2_neg(n);
                Int i = rat_floor((z - q) / cell);
                PQInterval I{p, q, i, n};
                if (I.left() < 0 || I.right() > 1) continue;
                Rat s = (f.value(I.right()) - f.value(I.left())) / I.length();
                if (!rec.any || s > rec.sup) rec.sup = s;
                if (!rec.any || s < rec.inf) rec.inf = s;
                rec.any = true;
            }
            if (rec.any) recs.push_back(std::move(rec));
        }
    }
    std::optional<PQPairCandidate> best;
    Rat best_gap;
    for (const auto& hot : recs) {
        if (!(hot.sup > gammaT)) continue;
        for (const auto& cold : recs) {
            if (!(cold.inf < betaT)) continue;
            Rat gap = hot.sup - cold.inf;
            if (!best || gap > best_gap) {
                best = PQPairCandidate{hot.p, hot.q, cold.p, cold.q, hot.sup, cold.inf};
                best_gap = gap;
            }
        }
    }
    return best;
}

}  // namespace dini
