#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "budget.hpp"
#include "cauchy.hpp"
#include "errors.hpp"
#include "rational.hpp"

namespace dini {

/// Lambda_{A,p}: 0 outside the open interval A, peak p|A|/2 at the midpoint,
/// slopes +-p on the halves.
inline Rat sawtooth_eval(const Rat& a, const Rat& b, const Rat& p, const Rat& x) {
    if (x <= a || x >= b) return Rat(0);
    Rat mid = (a + b) / 2;
    return x <= mid ? Rat(p * (x - a)) : Rat(p * (b - x));
}

struct CoverInterval {
    Rat a, b;  // open interval with dyadic endpoints
    Rat length() const { return b - a; }
};

/// Truncated effective null cover: levels of disjoint open intervals, each level-m+1
/// interval nested in some level-m interval. ML mode additionally demands
/// lambda(G_m) <= 8^{-m}.
struct EffectiveCover {
    std::vector<std::vector<CoverInterval>> levels;

    Rat level_measure(size_t m) const {
        Rat s = 0;
        for (const auto& d : levels[m]) s += d.length();
        return s;
    }

    void validate(bool ml_mode = false) const {
        for (size_t m = 0; m < levels.size(); ++m) {
            for (const auto& d : levels[m]) {
                if (!(d.a < d.b)) throw PreconditionViolated("empty cover interval");
                if (!Dyadic::is_dyadic(d.a) || !Dyadic::is_dyadic(d.b))
                    throw PreconditionViolated("cover endpoints must be dyadic");
                if (m > 0) {
                    bool nested = false;
                    for (const auto& up : levels[m - 1])
                        if (up.a <= d.a && d.b <= up.b) {
                            nested = true;
                            break;
                        }
                    if (!nested)
                        throw NestingViolated("interval (" + rat_str(d.a) + "," + rat_str(d.b) +
                                              ") at level " + std::to_string(m) +
                                              " not nested in level " + std::to_string(m - 1));
                }
            }
            if (ml_mode && level_measure(m) > pow2_neg(3 * static_cast<unsigned>(m)))
                throw MeasureTooLarge("lambda(G_" + std::to_string(m) + ") = " +
                                      rat_str(level_measure(m)) + " exceeds 8^-" +
                                      std::to_string(m));
        }
    }
};

/// Dilation: same midpoints, triple length, clipped to [0,1].
inline EffectiveCover dilated_cover(const EffectiveCover& cover) {
    EffectiveCover out;
    out.levels.resize(cover.levels.size());
    for (size_t m = 0; m < cover.levels.size(); ++m)
        for (const auto& d : cover.levels[m]) {
            Rat mid = (d.a + d.b) / 2;
            Rat half = 3 * d.length() / 2;
            Rat a = mid - half, b = mid + half;
            if (a < 0) a = 0;
            if (b > 1) b = 1;
            out.levels[m].push_back({a, b});
        }
    // clipping can only shrink, so lambda(G^) <= 3 lambda(G) holds per level
    for (size_t m = 0; m < cover.levels.size(); ++m)
        if (out.level_measure(m) > 3 * cover.level_measure(m))
            throw MeasureTooLarge("dilated level " + std::to_string(m) + " grew past 3x");
    return out;
}

/// One refined interval C_{m,i}; indices record which D it partitions and which
/// level-(m-1) C contains it (-1 at level 0).
struct CInterval {
    Rat a, b;
    size_t parent_d = 0;
    long parent_c = -1;
    Rat length() const { return b - a; }
};

struct SawtoothConstruction {
    EffectiveCover cover;
    /// creation order per level (lengths nonincreasing)
    std::vector<std::vector<CInterval>> C;
    /// position order: indices into C[m] sorted by left endpoint
    std::vector<std::vector<size_t>> by_pos;

    /// Index (into C[m]) of the interval whose closure contains x, if any.
    std::optional<size_t> locate(size_t m, const Rat& x) const {
        const auto& order = by_pos[m];
        size_t lo = 0, hi = order.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (C[m][order[mid]].b < x)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo == order.size()) return std::nullopt;
        const CInterval& c = C[m][order[lo]];
        if (c.a <= x && x <= c.b) return order[lo];
        return std::nullopt;
    }
};

/// Refinement: partition each D_{m,l} (in list order, deferring intervals not yet
/// covered by level-(m-1) C's) into chunks of equal dyadic length — the largest power
/// of 2 below eps = min(|C_{m,N-1}|, 8^{-m} 2^{-l} delta), delta = min(|D|, lengths of
/// the covering C_{m-1,r}) — split first along covering-C boundaries, remainders last
/// in nonincreasing order.
inline SawtoothConstruction refine(const EffectiveCover& cover,
                                   unsigned long long split_budget = 0) {
    if (split_budget == 0) split_budget = 2 * enumeration_budget();
    cover.validate();
    SawtoothConstruction sc;
    sc.cover = cover;
    sc.C.resize(cover.levels.size());
    sc.by_pos.resize(cover.levels.size());
    unsigned long long created = 0;
    for (size_t m = 0; m < cover.levels.size(); ++m) {
        std::optional<Rat> last_len;
        // eligibility ordering: defer D's not covered yet, retry once at the end
        std::vector<size_t> order(cover.levels[m].size());
        for (size_t l = 0; l < order.size(); ++l) order[l] = l;
        std::vector<size_t> pending = order, deferred;
        bool second_pass = false;
        while (!pending.empty()) {
            size_t l = pending.front();
            pending.erase(pending.begin());
            const CoverInterval& D = cover.levels[m][l];
            // covering C's at level m-1 (the whole line at level 0)
            std::vector<std::pair<Rat, Rat>> parents;
            std::vector<long> parent_ids;
            Rat delta = D.length();
            if (m == 0) {
                parents.push_back({Rat(-1), Rat(2)});
                parent_ids.push_back(-1);
            } else {
                bool gap = false;
                Rat at = D.a;
                while (at < D.b) {
                    // first level-(m-1) interval with b > at, in position order
                    const auto& order = sc.by_pos[m - 1];
                    size_t lo = 0, hi = order.size();
                    while (lo < hi) {
                        size_t mid = (lo + hi) / 2;
                        if (sc.C[m - 1][order[mid]].b <= at)
                            lo = mid + 1;
                        else
                            hi = mid;
                    }
                    if (lo == order.size() || sc.C[m - 1][order[lo]].a > at) {
                        gap = true;
                        break;
                    }
                    const CInterval& pc = sc.C[m - 1][order[lo]];
                    parents.push_back({pc.a, pc.b});
                    parent_ids.push_back(static_cast<long>(order[lo]));
                    if (pc.length() < delta) delta = pc.length();
                    at = pc.b;
                }
                if (gap) {
                    if (second_pass)
                        throw NestingViolated("D_{" + std::to_string(m) + "," + std::to_string(l) +
                                              "} not covered by refined level " +
                                              std::to_string(m - 1));
                    deferred.push_back(l);
                    if (pending.empty()) {
                        pending = deferred;
                        deferred.clear();
                        second_pass = true;
                    }
                    continue;
                }
            }
            Rat eps = pow2_neg(3 * static_cast<unsigned>(m)) * pow2_neg(static_cast<unsigned>(l)) *
                      delta;
            if (last_len && *last_len < eps) eps = *last_len;
            unsigned t = 0;
            while (!(pow2_neg(t) < eps)) ++t;
            Rat chunk = pow2_neg(t);
            // pieces of D split at covering-C boundaries
            struct Piece {
                Rat a, b;
                long pc;
            };
            std::vector<Piece> pieces;
            for (size_t j = 0; j < parents.size(); ++j) {
                Rat pa = std::max(D.a, parents[j].first);
                Rat pb = std::min(D.b, parents[j].second);
                if (pa < pb) pieces.push_back({pa, pb, parent_ids[j]});
            }
            std::vector<CInterval> rems;
            Int den = pow_int(2, t);
            for (const auto& pc : pieces) {
                Int full = rat_floor((pc.b - pc.a) / chunk);
                // chunk j runs from (base + j)/2^t; endpoints stay on the 2^{-t} grid
                // shifted by the piece start, so integer arithmetic suffices
                Rat base_r = pc.a * den;
                Int base = numerator(base_r);
                bool aligned = denominator(base_r) == 1;
                Rat at = pc.a;
                for (Int j = 0; j < full; ++j) {
                    Rat nxt = aligned ? Rat(base + j + 1, den) : Rat(at + chunk);
                    sc.C[m].push_back({at, nxt, l, pc.pc});
                    at = nxt;
                    if (++created > split_budget)
                        throw SplitBudgetExceeded("refinement exceeds " +
                                                  std::to_string(split_budget) + " intervals");
                }
                if (at < pc.b) rems.push_back({at, pc.b, l, pc.pc});
            }
            std::sort(rems.begin(), rems.end(),
                      [](const CInterval& x, const CInterval& y) { return x.length() > y.length(); });
            for (auto& r : rems) {
                sc.C[m].push_back(r);
                if (++created > split_budget)
                    throw SplitBudgetExceeded("refinement exceeds " +
                                              std::to_string(split_budget) + " intervals");
            }
            last_len = sc.C[m].empty() ? last_len : std::optional<Rat>(sc.C[m].back().length());
            if (pending.empty() && !deferred.empty() && !second_pass) {
                pending = deferred;
                deferred.clear();
                second_pass = true;
            }
        }
        // endpoints are dyadic, so sort by the integer numerator at a common exponent
        // (rational comparisons cross-multiply and dominate the runtime otherwise)
        unsigned emax = 0;
        for (const auto& c : sc.C[m])
            emax = std::max(emax, static_cast<unsigned>(boost::multiprecision::msb(denominator(c.a))));
        std::vector<std::pair<Int, size_t>> keys;
        keys.reserve(sc.C[m].size());
        for (size_t i = 0; i < sc.C[m].size(); ++i) {
            unsigned e = static_cast<unsigned>(boost::multiprecision::msb(denominator(sc.C[m][i].a)));
            keys.emplace_back(numerator(sc.C[m][i].a) << (emax - e), i);
        }
        std::sort(keys.begin(), keys.end());
        sc.by_pos[m].resize(keys.size());
        for (size_t i = 0; i < keys.size(); ++i) sc.by_pos[m][i] = keys[i].second;
    }
    return sc;
}

/// f = sum_m f_m with f_m = sum_i Lambda_{C_{m,i}, 4^m}, truncated at the cover's
/// last level; the omitted tail is bounded by sum_{k>M} 2^{-k-1}.
class SawtoothFunction {
public:
    explicit SawtoothFunction(SawtoothConstruction sc) : sc_(std::move(sc)) {}

    const SawtoothConstruction& construction() const { return sc_; }
    size_t depth() const { return sc_.C.size(); }

    Rat scale(size_t m) const { return Rat(pow_int(4, static_cast<unsigned>(m))); }

    /// f_m(x): at most one sawtooth of level m is live at x.
    Rat level_value(size_t m, const Rat& x) const {
        auto idx = sc_.locate(m, x);
        if (!idx) return Rat(0);
        const CInterval& c = sc_.C[m][*idx];
        return sawtooth_eval(c.a, c.b, scale(m), x);
    }

    /// Exact value of the truncated sum.
    Rat value(const Rat& x) const {
        Rat v = 0;
        for (size_t m = 0; m < depth(); ++m) v += level_value(m, x);
        return v;
    }

    /// The computability-modulus evaluation: partial sum over levels k <= m up to the
    /// stage i* with |C_{k,i*}| <= 8^{-m}/(m+1), tails certified <= 2 * 2^{-m-1}.
    /// Asserts the partial sum is within 2^{-m} of the exact truncated value.
    Rat approx_value(const Rat& x, unsigned m) const {
        Rat cut = pow2_neg(3 * m) / Rat(m + 1);
        // one stage valid for all levels <= m (lengths nonincreasing per level)
        size_t istar = 0;
        for (size_t k = 0; k <= m && k < depth(); ++k) {
            size_t j = 0;
            while (j < sc_.C[k].size() && sc_.C[k][j].length() > cut) ++j;
            istar = std::max(istar, j);
        }
        Rat partial = 0;
        for (size_t k = 0; k <= m && k < depth(); ++k)
            for (size_t i = 0; i < std::min(istar, sc_.C[k].size()); ++i) {
                const CInterval& c = sc_.C[k][i];
                partial += sawtooth_eval(c.a, c.b, scale(k), x);
            }
        Rat exact = value(x);
        if (rat_abs(partial - exact) > pow2_neg(m))
            throw PropertyViolation("modulus stage missed its certified error at x=" + rat_str(x));
        return partial;
    }

    /// Large-slope witness at a rational target: h = +-|A_m|/4 keeping z and z+h in one
    /// half of A_m, exact slope of the truncated sum, bound 4^{m-1} - 4 minus the
    /// truncation slack sum_{k>M} 2^{-k+2}.
    struct Witness {
        Rat h;
        Rat slope;
        Rat bound;  // 4^{m-1} - 4
        Rat slack;  // truncation
        bool left_half = false;
    };

    Witness nondiff_witness(const Rat& z, unsigned m) const {
        if (m >= depth()) throw NotInCover("level " + std::to_string(m) + " not constructed");
        auto idx = sc_.locate(m, z);
        if (!idx) throw NotInCover("z outside level " + std::to_string(m));
        const CInterval& A = sc_.C[m][*idx];
        if (z <= A.a || z >= A.b) throw NotInCover("z at a refined endpoint");
        Rat len = A.length();
        Rat rel = (z - A.a) / len;
        Rat h;
        bool left = rel < Rat(1, 2);
        if (rel <= Rat(1, 4))
            h = len / 4;
        else if (rel < Rat(1, 2))
            h = -len / 4;
        else if (rel <= Rat(3, 4))
            h = len / 4;
        else
            h = -len / 4;
        Witness w;
        w.h = h;
        w.left_half = left;
        w.slope = (value(z + h) - value(z)) / h;
        w.bound = m >= 1 ? Rat(pow_int(4, m - 1)) - 4 : Rat(-3);
        w.slack = pow2(2 - static_cast<int>(depth()));  // sum_{k >= M+1} 2^{-k+2}
        return w;
    }

    /// CauchyName variant: evaluates z at precision p and widens the slack by the
    /// certified displacement against the Lipschitz bound of the truncated sum.
    Witness nondiff_witness(const CauchyName& z, unsigned m, unsigned p = 96) const {
        Witness w = nondiff_witness(z.approx(p), m);
        Rat lip = (Rat(pow_int(4, static_cast<unsigned>(depth()))) - 1) / 3;
        w.slack += 2 * lip * pow2_neg(p) / rat_abs(w.h);
        return w;
    }

    // ---- densities and variation -----------------------------------------------

    /// Theta_{C,4^m}: +4^m on the left half of C, -4^m on the right half.
    Rat density_value(size_t m, const Rat& x) const {
        auto idx = sc_.locate(m, x);
        if (!idx) return Rat(0);
        const CInterval& c = sc_.C[m][*idx];
        if (x <= c.a || x >= c.b) return Rat(0);
        return x < (c.a + c.b) / 2 ? scale(m) : Rat(-scale(m));
    }

    Rat level_l1(size_t m) const {
        Rat s = 0;
        for (const auto& c : sc_.C[m]) s += scale(m) * c.length();
        return s;
    }

    struct VariationReport {
        std::vector<Rat> per_level;  // integral |g_m|
        Rat total;
    };

    VariationReport variation(bool ml_mode = true) const {
        VariationReport rep;
        rep.total = 0;
        for (size_t m = 0; m < depth(); ++m) {
            Rat v = level_l1(m);
            if (ml_mode && v > pow2_neg(static_cast<unsigned>(m)))
                throw MeasureTooLarge("integral |g_" + std::to_string(m) + "| = " + rat_str(v) +
                                      " exceeds 2^-" + std::to_string(m));
            rep.per_level.push_back(v);
            rep.total += v;
        }
        return rep;
    }

    /// Integral of the step function g_m over [0, x], computed by enumerating step
    /// segments (independently of the Lambda closed form).
    Rat density_integral(size_t m, const Rat& x) const {
        Rat total = 0;
        for (size_t pos : sc_.by_pos[m]) {
            const CInterval& c = sc_.C[m][pos];
            if (c.a >= x) break;
            Rat mid = (c.a + c.b) / 2;
            Rat upT = std::min(x, mid) - c.a;          // time spent on +4^m
            Rat dnT = std::max(Rat(0), Rat(std::min(x, c.b) - mid));  // on -4^m
            if (upT > 0) total += scale(m) * upT;
            if (dnT > 0) total -= scale(m) * dnT;
        }
        return total;
    }

private:
    SawtoothConstruction sc_;
};

// ---- Fixture -------------------------------------------------------------------

/// Nested single-interval cover around 1/3: level m is the dyadic cell of depth d_m
/// containing 1/3, depths 3, 4, 9, 16, 27, 40, 57. Depths keep lambda(G_m) <= 8^{-m},
/// each cell inside a single level-(m-1) chunk, and every chunk exponent even, so 1/3
/// sits at relative position 1/3 (second quarter) of its chunk at every level.
inline EffectiveCover sawtooth_fixture_cover() {
    EffectiveCover cover;
    const unsigned depths[] = {3, 4, 9, 16, 27, 40, 57};
    for (unsigned d : depths) {
        Int den = pow_int(2, d);
        Int i = den / 3;  // floor(2^d / 3)
        cover.levels.push_back({{Rat(i, den), Rat(i + 1, den)}});
    }
    return cover;
}

}  // namespace dini
