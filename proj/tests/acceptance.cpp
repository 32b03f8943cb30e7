// Acceptance gate: ten property checks, each timed against its budget, every
// numeric comparison exact. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail.
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dinidiff/cauchy.hpp"
#include "dinidiff/correspondence.hpp"
#include "dinidiff/diffpoint.hpp"
#include "dinidiff/doobtree.hpp"
#include "dinidiff/linterval.hpp"
#include "dinidiff/sawtooth.hpp"
#include "dinidiff/slopes.hpp"

using namespace dini;

namespace {

struct Failure {
    std::string what;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

// deterministic 64-bit LCG for sampled checks (no seeds exposed, same bytes every run)
struct Lcg {
    unsigned long long s = 0x9e3779b97f4a7c15ULL;
    unsigned long long next() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return s >> 11;
    }
    unsigned long long below(unsigned long long n) { return next() % n; }
};

MonotoneFn square_fn() {
    return MonotoneFn([](const Rat& q, unsigned) { return Rat(q * q); }, true, true, 0, "square");
}

Martingale savings_predictor() {
    return SavingsMartingale(normalize(Martingale::predict_constant(2, Rat(1, 2), 0)))
        .martingale();
}

// ---- criterion bodies ------------------------------------------------------------

void criterion1_fairness() {
    unsigned depth = 10;
    auto pass = [&](const Martingale& M, const std::string& tag) {
        FairnessReport rep = check_fairness(M, depth);
        require(rep.ok(), tag + " violates fairness at " +
                              (rep.ok() ? "" : rep.violations.front().sigma.str()));
        require(rep.checked > 0, tag + " checked nothing");
    };
    for (int k : {2, 3}) {
        std::string b = " (base " + std::to_string(k) + ")";
        pass(Martingale::constant(k, Rat(7, 5)), "constant" + b);
        pass(Martingale::doubler(k, k - 1), "doubler" + b);
        pass(Martingale::predict_constant(k, Rat(1, 3), 0), "predict_constant" + b);
        pass(Martingale::predict_alternating(k, Rat(1, 2)), "predict_alternating" + b);
        pass(Martingale::predict_repeat(k, Rat(2, 3)), "predict_repeat" + b);
        pass(mart(square_fn(), k), "mart(square)" + b);
        pass(mart(MonotoneFn::identity(), k), "mart(identity)" + b);
    }
    Martingale L = normalize(Martingale::predict_constant(2, Rat(1, 2), 0));
    pass(L, "normalize output");
    pass(normalize(Martingale::doubler(2, 0)), "normalize(doubler)");
    pass(SavingsMartingale(L).martingale(), "savings output");
    // base conversion in exact mode: sources uniform below a finite depth
    pass(base_convert(Martingale::constant(2, Rat(7, 5)), 3).result, "base_convert 2->3");
    pass(base_convert(Martingale::constant(3, Rat(7, 5)), 2).result, "base_convert 3->2");
    std::map<std::vector<int>, Rat> table{
        {{}, Rat(1)}, {{0}, Rat(3, 2)}, {{1}, Rat(1, 2)}};
    pass(base_convert(Martingale::from_table(2, 1, table), 3).result, "base_convert table 2->3");
}

void criterion2_savings() {
    Martingale M = savings_predictor();
    Rat m0 = M.initial();
    unsigned depth = 14;
    // linear growth bound on every string to depth 14
    std::vector<DigitString> level{DigitString(2, {})};
    unsigned long long nodes = 0;
    for (unsigned n = 0; n <= depth; ++n) {
        std::vector<DigitString> next;
        for (auto& s : level) {
            require(M.eval(s) <= Rat(2 * Int(s.size())) + m0,
                    "growth bound fails at " + s.str());
            ++nodes;
            if (n < depth) {
                next.push_back(s.child(0));
                next.push_back(s.child(1));
            }
        }
        level = std::move(next);
    }
    require(nodes == (1ULL << (depth + 1)) - 1, "enumeration incomplete");
    // 10^3 sampled nested pairs sigma < rho, both <= depth 14
    Lcg rng;
    for (int t = 0; t < 1000; ++t) {
        unsigned len = 2 + static_cast<unsigned>(rng.below(depth - 1));  // |rho| in [2,14]
        std::vector<int> rho;
        for (unsigned i = 0; i < len; ++i) rho.push_back(static_cast<int>(rng.below(2)));
        unsigned cut = static_cast<unsigned>(rng.below(len));  // |sigma| in [0, len)
        DigitString r(2, rho);
        DigitString s = r.prefix(cut);
        require(M.eval(r) >= M.eval(s) - 2, "savings drop at " + r.str());
    }
}

void criterion3_roundtrips() {
    for (int k : {2, 3}) {
        std::vector<std::pair<std::string, Martingale>> ms{
            {"constant", Martingale::constant(k, Rat(7, 5))},
            {"doubler", Martingale::doubler(k, 0)},
            {"predict_constant", Martingale::predict_constant(k, Rat(1, 3), 0)},
            {"predict_alternating", Martingale::predict_alternating(k, Rat(1, 2))},
            {"predict_repeat", Martingale::predict_repeat(k, Rat(2, 3))}};
        for (auto& [tag, M] : ms) {
            RoundtripReport rep = roundtrip_check(M, 8);
            require(rep.ok(), "Mart(Fcn(M)) != M for " + tag + " base " + std::to_string(k) +
                                  (rep.ok() ? "" : " at " + rep.mismatches.front().where));
        }
        require(roundtrip_check_f(MonotoneFn::identity(), k, 8).ok(),
                "Fcn(Mart(identity)) mismatch base " + std::to_string(k));
        require(roundtrip_check_f(square_fn(), k, 8).ok(),
                "Fcn(Mart(square)) mismatch base " + std::to_string(k));
    }
    require(roundtrip_check_f(staircase_fn(), 2, 8).ok(), "Fcn(Mart(staircase)) mismatch");
}

void criterion4_linterval() {
    LSet L = build_L(Rat(4));
    require(L.k == 3, "alpha = 4 should give k = 3");
    require(L.L.size() <= 16, "L has more than 16 rationals");
    unsigned long long instances = 0;
    for (int i = 1; i <= 63; ++i)
        for (int j = i + 1; j <= 63; ++j) {
            Rat x(i, 128), y(j, 128);
            LIntervalWitness w = outer_approx(L, x, y);
            require(w.A.left() < x && y < w.A.right(), "outer containment fails");
            require(w.A.length() < 4 * (y - x), "outer ratio fails");
            if (!w.reflected) w.validate(x, y, Rat(4), L.k);
            InnerResult inner = inner_approx(x, y, Rat(4));
            require(x < inner.B.left() && inner.B.right() < y, "inner containment fails");
            require((y - x) < 4 * inner.B.length(), "inner ratio fails");
            ++instances;
        }
    require(instances == 1953, "expected 1953 instances");
}

void criterion5_sawtooth_invariants() {
    SawtoothFunction F(refine(sawtooth_fixture_cover()));
    const SawtoothConstruction& sc = F.construction();
    require(F.depth() == 7, "fixture should reach level 6");
    Lcg rng;
    for (size_t m = 0; m < F.depth(); ++m) {
        const auto& C = sc.C[m];
        // creation lengths nonincreasing, position order disjoint
        for (size_t i = 1; i < C.size(); ++i)
            require(C[i].length() <= C[i - 1].length(), "length order fails");
        for (size_t i = 1; i < sc.by_pos[m].size(); ++i)
            require(C[sc.by_pos[m][i - 1]].b <= C[sc.by_pos[m][i]].a, "overlap at level " +
                                                                          std::to_string(m));
        // nested in the recorded parent and 8^m times smaller
        if (m > 0)
            for (const auto& c : C) {
                require(c.parent_c >= 0, "missing parent");
                const CInterval& A = sc.C[m - 1][static_cast<size_t>(c.parent_c)];
                require(A.a <= c.a && c.b <= A.b, "child escapes parent");
                require(c.length() <= pow2_neg(3 * static_cast<unsigned>(m)) * A.length(),
                        "child too long");
            }
        // peak f_m <= 2^{-m-1}
        require(F.scale(m) * C.front().length() / 2 <= pow2_neg(static_cast<unsigned>(m) + 1),
                "peak too high at level " + std::to_string(m));
        // modulus: |x-y| <= 8^{-m} implies |f(x)-f(y)| < 2^{-m+2}, 10^3 sampled pairs
        unsigned gbits = 3 * static_cast<unsigned>(m) + 10;
        Int gden = pow_int(2, gbits);
        for (int t = 0; t < 1000; ++t) {
            Int xi = Int(rng.below(1ULL << 40)) % gden;
            Int di = Int(rng.below(1ULL << 30)) % (pow_int(2, 10) + 1);
            Rat x(xi, gden);
            Rat y = x + Rat(di, gden);  // 0 <= y - x <= 2^10/2^gbits = 8^{-m}
            if (y > 1) continue;
            require(rat_abs(F.value(x) - F.value(y)) <
                        pow2(2 - static_cast<int>(m)),
                    "modulus fails at level " + std::to_string(m));
        }
        // exact integral identity f_m = integral of g_m at every breakpoint:
        // accumulate the step integral in position order and compare against the
        // closed form (disjointness above makes one bump live per point)
        Rat integral = 0;
        for (size_t pos : sc.by_pos[m]) {
            const CInterval& c = C[pos];
            Rat mid = (c.a + c.b) / 2;
            require(integral == sawtooth_eval(c.a, c.b, F.scale(m), c.a),
                    "integral identity fails at a left breakpoint");
            integral += F.scale(m) * (mid - c.a);
            require(integral == sawtooth_eval(c.a, c.b, F.scale(m), mid),
                    "integral identity fails at a midpoint");
            integral -= F.scale(m) * (c.b - mid);
            require(integral == sawtooth_eval(c.a, c.b, F.scale(m), c.b),
                    "integral identity fails at a right breakpoint");
        }
        require(integral == 0, "step integral does not cancel over the level");
    }
    auto rep = F.variation(true);
    require(rep.total <= 2, "total variation exceeds 2");
}

void criterion6_witness() {
    SawtoothFunction F(refine(sawtooth_fixture_cover()));
    Rat z(1, 3);
    for (unsigned m = 2; m <= 4; ++m) {
        auto w = F.nondiff_witness(z, m);
        require(w.slack <= Rat(1, 16), "slack exceeds 2^-4");
        require(rat_abs(w.h) ==
                    F.construction().C[m][*F.construction().locate(m, z)].length() / 4,
                "h is not |A_m|/4");
        require(w.slope >= Rat(pow_int(4, m - 1)) - 4 - w.slack,
                "witness slope below 4^" + std::to_string(m - 1) + " - 4 - slack");
    }
}

void criterion7_doob() {
    DoobTree tree(staircase_fn(), staircase_config(), true);
    auto trace = tree.run_strategy(CauchyName::of_rational(Rat(1, 3), "third"), 6);
    unsigned entries = 0;
    Rat last_gamma = 0;
    for (const auto& st : trace)
        if (st.entry) {
            ++entries;
            last_gamma = st.gamma;
        }
    require(entries >= 6, "fewer than 6 betting entries");
    Rat alpha6 = 1;
    for (int i = 0; i < 6; ++i) alpha6 *= tree.config().alpha;
    require(last_gamma >= alpha6, "Gamma below alpha^6 at the sixth entry");
}

void criterion8_diagonalization() {
    std::vector<MonotoneFn> gs{sawtooth_integral(Rat(1, 4), Rat(1, 2), Rat(4)),
                               sawtooth_integral(Rat(1, 2), Rat(3, 4), Rat(8))};
    Martingale V = reduction_martingale(staircase_fn(), Rat(1), Rat(0), gs, 8);
    DiagonalTrace tr = diagonalize(V, 30);
    require(tr.Z.size() == 30, "trace too short");
    Rat v3 = V.eval(DigitString::parse(2, "100"));
    for (unsigned n = 3; n < 30; ++n) {
        DigitString s = DigitString::parse(2, tr.Z.substr(0, n));
        int b = tr.Z[n] - '0';
        require(V.eval(s.child(b)) <= V.eval(s.child(1 - b)) + pow2_neg(n),
                "local step inequality fails at n = " + std::to_string(n));
        require(V.eval(s.child(b)) <= v3 + Rat(1, 4),
                "capital bound fails at n = " + std::to_string(n));
    }
}

void criterion9_base_conversion_pipeline() {
    // a base-2 predictor that profits on champernowne2's bit stream
    Martingale P = Martingale::predict_constant(2, Rat(1, 4), 1);
    DigitString bits = DigitString::parse(2, champernowne2_bits(64));
    std::vector<Rat> caps = capital_trace(P, bits, 64);
    bool exceeded = false;
    for (const Rat& c : caps)
        if (c > 4) exceeded = true;
    require(exceeded, "predictor never exceeds capital 4 in 64 digits");

    Martingale M = SavingsMartingale(normalize(P)).martingale();
    BaseConversion conv = base_convert(M, 3, 64);
    require(check_fairness(conv.result, 5).ok(), "converted martingale unfair to depth 5");

    // certified base-3 digits of the same real: the expansions of x - 2^-220 and
    // x + 2^-220 must agree on the prefix
    Rat q = champernowne2_name().approx(220);
    Rat delta = pow2_neg(220);
    auto expand = [](Rat x, unsigned n) {
        std::vector<int> d;
        for (unsigned i = 0; i < n; ++i) {
            x *= 3;
            Int b = rat_floor(x);
            d.push_back(static_cast<int>(b));
            x -= Rat(b);
        }
        return d;
    };
    std::vector<int> lo = expand(q - delta, 32), hi = expand(q + delta, 32);
    require(lo == hi, "base-3 digits not certified at this precision");
    std::string digits;
    for (int d : lo) digits.push_back(char('0' + d));
    require(digits == "10212202120121220012101201001101", "certified digits changed");

    DigitString Z3(3, lo);
    bool above_one = false;
    for (unsigned n = 0; n <= 32 && !above_one; ++n)
        if (conv.result.eval(Z3.prefix(n)) > 1) above_one = true;
    require(above_one, "converted capital never exceeds 1 within 32 base-3 digits");
}

void criterion10_negative_controls() {
    std::vector<Rat> schedule;
    for (unsigned i = 4; i <= 12; ++i) schedule.push_back(pow2_neg(i));
    auto probe = pseudo_derivative_probe(MonotoneFn::identity(),
                                         CauchyName::of_rational(Rat(1, 3)), schedule,
                                         pow2_neg(12));
    for (const auto& rec : probe.records) {
        require(rec.n_pairs > 0, "identity probe has an empty record");
        require(rec.sup_slope == 1 && rec.inf_slope == 1, "identity probe not flat");
    }

    Martingale C = Martingale::constant(2, Rat(5, 7));
    for (const Rat& v : capital_trace(C, DigitString::parse(2, "011010"), 6))
        require(v == Rat(5, 7), "constant trace not flat");

    Martingale bad(2, [](const DigitString& s, unsigned) { return Rat(Int(1) << s.size()); },
                   true, "broken");
    require(!check_fairness(bad, 3).ok(), "broken evaluator not flagged");

    EffectiveCover crooked;
    crooked.levels = {{{Rat(1, 4), Rat(1, 2)}}, {{Rat(1, 8), Rat(3, 16)}}};
    bool rejected = false;
    try {
        crooked.validate();
    } catch (const NestingViolated&) {
        rejected = true;
    }
    require(rejected, "nesting violation not rejected");
}

}  // namespace

int main() {
    struct Criterion {
        int n;
        std::string desc;
        long limit_ms;
        std::function<void()> body;
    };
    std::vector<Criterion> criteria{
        {1, "exact fairness of builtins and transform outputs to depth 10", 10000,
         criterion1_fairness},
        {2, "savings drop bound on 1000 nested pairs and growth bound to depth 14", 30000,
         criterion2_savings},
        {3, "Mart/Fcn round trips exact to depth 8 in bases 2 and 3", 30000,
         criterion3_roundtrips},
        {4, "interval algebra exhaustive over 1953 dyadic pairs at alpha 4", 10000,
         criterion4_linterval},
        {5, "sawtooth cover invariants, modulus, variation, integral identity", 60000,
         criterion5_sawtooth_invariants},
        {6, "non-differentiability witness slopes at the target point", 10000,
         criterion6_witness},
        {7, "two-state strategy multiplies capital by alpha^6 over six entries", 60000,
         criterion7_doob},
        {8, "30-bit diagonalization capital bound, exact", 10000, criterion8_diagonalization},
        {9, "base-2 to base-3 conversion pipeline with capital thresholds", 120000,
         criterion9_base_conversion_pipeline},
        {10, "negative controls: flat probes, flat traces, flagged violations", 5000,
         criterion10_negative_controls},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.body();
        } catch (const Failure& f) {
            error = f.what;
        } catch (const std::exception& e) {
            error = std::string("unexpected exception: ") + e.what();
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        if (error.empty() && ms > c.limit_ms)
            error = "runtime " + std::to_string(ms) + " ms exceeds " +
                    std::to_string(c.limit_ms) + " ms";
        if (error.empty()) {
            std::cout << "PASS criterion " << c.n << ": " << c.desc << " (" << ms << " ms, limit "
                      << c.limit_ms << " ms)\n";
        } else {
            std::cout << "FAIL criterion " << c.n << ": " << c.desc << " -- " << error << " ("
                      << ms << " ms)\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
