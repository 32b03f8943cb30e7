#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cauchy.hpp"
#include "errors.hpp"
#include "ratfn.hpp"
#include "rational.hpp"

namespace dini {

/// S_f(a,b) = (f(b) - f(a)) / (b - a); exact when f is exact. For approximate f the
/// result is within 2^{-p+1} / (b - a) of the true slope.
inline Rat slope(const RationalFn& f, const Rat& a, const Rat& b, unsigned p = 0) {
    if (a == b) throw PreconditionViolated("slope endpoints must differ");
    return (f.value(b, p) - f.value(a, p)) / (b - a);
}

struct ProbeRecord {
    Rat h;
    Rat sup_slope;  // lower bound for the true sup over the family
    Rat inf_slope;  // upper bound for the true inf
    unsigned long long n_pairs = 0;
};

struct DerivativeProbe {
    std::vector<ProbeRecord> records;
};

inline std::vector<Rat> default_probe_schedule() {
    std::vector<Rat> hs;
    for (unsigned i = 4; i <= 12; ++i) hs.push_back(pow2_neg(i));
    return hs;
}

/// Scan rational pairs a <= z <= b with 0 < b - a <= h over a fixed grid of the given
/// step, recording sup/inf slopes per h. Since the grid is shared across the schedule,
/// the pair families are nested and sup records are nondecreasing in h. Straddle tests
/// for a CauchyName z use approx at 4 bits beyond the grid depth; ties are included
/// (conservative for sup records).
inline DerivativeProbe pseudo_derivative_probe(const RationalFn& f, const CauchyName& z,
                                               std::vector<Rat> schedule, const Rat& grid_step,
                                               bool middle_third = false) {
    if (grid_step <= 0) throw PreconditionViolated("grid step must be positive");
    std::sort(schedule.begin(), schedule.end(), std::greater<Rat>());
    unsigned depth = 0;
    while (pow2_neg(depth) > grid_step) ++depth;
    unsigned p = depth + 4;
    Rat zq = z.approx(p);
    Rat tie = pow2_neg(p);

    DerivativeProbe probe;
    for (const Rat& h : schedule) {
        ProbeRecord rec;
        rec.h = h;
        bool any = false;
        // grid points in [z - h, z + h]
        Int lo = rat_ceil((zq - h) / grid_step);
        Int hi = rat_floor((zq + h) / grid_step);
        for (Int ia = lo; ia <= hi; ++ia) {
            Rat a = Rat(ia) * grid_step;
            if (a > zq + tie) break;  // need a <= z
            Int ib_max = std::min(hi, ia + rat_floor(h / grid_step));
            for (Int ib = ia + 1; ib <= ib_max; ++ib) {
                Rat b = Rat(ib) * grid_step;
                if (b < zq - tie) continue;  // need z <= b
                if (middle_third) {
                    Rat third = (b - a) / 3;
                    if (a + third > zq + tie || b - third < zq - tie) continue;
                }
                Rat s = slope(f, a, b, p);
                ++rec.n_pairs;
                if (!any || s > rec.sup_slope) rec.sup_slope = s;
                if (!any || s < rec.inf_slope) rec.inf_slope = s;
                any = true;
            }
        }
        probe.records.push_back(std::move(rec));
    }
    return probe;
}

inline DerivativeProbe pseudo_derivative_probe(const RationalFn& f, const CauchyName& z) {
    return pseudo_derivative_probe(f, z, default_probe_schedule(), pow2_neg(12));
}

/// Middle-third family: pairs with z in the middle third of [a, b].
inline ProbeRecord middle_third_slopes(const RationalFn& f, const CauchyName& z, const Rat& h,
                                       const Rat& grid_step) {
    auto probe = pseudo_derivative_probe(f, z, {h}, grid_step, true);
    return probe.records.front();
}

// ---- Jordan decomposition on a rational grid ----------------------------------

struct JordanPair {
    MonotoneFn f0;  // grid variation of f
    MonotoneFn f1;  // f0 - f
};

/// f0(q) = variation of f on grid points <= q, f1 = f0 - f; both nondecreasing on the
/// grid and f = f0 - f1 exactly. Defined only at the grid points.
inline JordanPair jordan_decompose(const RationalFn& f, const std::vector<Rat>& grid) {
    if (!f.exact()) throw NotExact("jordan decomposition requires exact f");
    if (grid.size() < 2) throw PreconditionViolated("grid needs at least two points");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw PreconditionViolated("grid must be ascending");
    auto v0 = std::make_shared<std::map<Rat, Rat>>();
    auto v1 = std::make_shared<std::map<Rat, Rat>>();
    Rat var = 0;
    Rat prev = f.value(grid.front());
    (*v0)[grid.front()] = 0;
    (*v1)[grid.front()] = -prev;
    for (size_t i = 1; i < grid.size(); ++i) {
        Rat cur = f.value(grid[i]);
        var += rat_abs(cur - prev);
        (*v0)[grid[i]] = var;
        (*v1)[grid[i]] = var - cur;
        prev = std::move(cur);
    }
    auto lookup = [](std::shared_ptr<std::map<Rat, Rat>> m, std::string what) {
        return MonotoneFn(
            [m = std::move(m), what](const Rat& q, unsigned) {
                auto it = m->find(q);
                if (it == m->end()) throw DomainGap(what + " undefined off the grid");
                return it->second;
            },
            true, true, 0, what);
    };
    return {lookup(v0, "variation part"), lookup(v1, "negative part")};
}

/// Lipschitz reduction: f(x) = C x - h(x), nondecreasing when C is a Lipschitz bound for
/// h. The bound is checked on adjacent pairs of the supplied grid.
inline MonotoneFn lipschitz_to_monotone(const RationalFn& h, const Rat& C,
                                        const std::vector<Rat>& grid) {
    if (!h.exact()) throw NotExact("lipschitz reduction requires exact h");
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        Rat dh = rat_abs(h.value(grid[i + 1]) - h.value(grid[i]));
        if (dh > C * (grid[i + 1] - grid[i]))
            throw LipschitzViolated("|h(" + rat_str(grid[i + 1]) + ") - h(" + rat_str(grid[i]) +
                                    ")| = " + rat_str(dh) + " exceeds C*dx");
    }
    return MonotoneFn([h, C](const Rat& q, unsigned p) { return C * q - h.value(q, p); },
                      true, true, 0, "monotone reduction of " + h.label());
}

}  // namespace dini
