#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cauchy.hpp"
#include "correspondence.hpp"
#include "errors.hpp"
#include "martingale.hpp"
#include "ratfn.hpp"
#include "rational.hpp"

namespace dini {

/// Thresholds and interval families for the two-state strategy of the Doob-style
/// construction: chain beta~ alpha < beta < beta alpha < gamma < gamma alpha < gamma~,
/// 1 < alpha < 4/3, alpha^3 beta~ < gamma~, and precision K with
/// (gamma - 2^{-K}) / (beta + 2^{-K}) >= alpha.
struct DoobConfig {
    Rat beta_tilde, gamma_tilde;
    Rat alpha;
    Rat beta, gamma;
    unsigned K = 0;
    Rat pq_p{1}, pq_q{0};  // betting-entry split family
    Rat rs_p{1}, rs_q{0};  // kept for symmetry with the coasting family

    void validate() const {
        auto req = [](bool ok, const char* what) {
            if (!ok) throw PreconditionViolated(std::string("config: ") + what);
        };
        req(Rat(1) < alpha && alpha < Rat(4, 3), "1 < alpha < 4/3");
        req(alpha * alpha * alpha * beta_tilde < gamma_tilde, "alpha^3 beta~ < gamma~");
        req(beta_tilde * alpha < beta, "beta~ alpha < beta");
        req(beta < beta * alpha, "beta < beta alpha");
        req(beta * alpha < gamma, "beta alpha < gamma");
        req(gamma < gamma * alpha, "gamma < gamma alpha");
        req(gamma * alpha < gamma_tilde, "gamma alpha < gamma~");
        Rat eps = pow2_neg(K);
        req((gamma - eps) / (beta + eps) >= alpha, "(gamma-2^-K)/(beta+2^-K) >= alpha");
        req(pq_p > 0 && rs_p > 0, "positive scales");
    }
};

enum class DoobState { betting, non_betting };

struct DoobNode {
    Rat a, b;
    Rat fa, fb;
    Rat ga, gb;
    Rat gamma;  // = S_g(a,b)
    DoobState state = DoobState::betting;
    bool filler = false;  // uncovered remainder of a greedy split; linear, inert
    unsigned depth = 0;
    std::vector<size_t> children;

    Rat slope_f() const { return (fb - fa) / (b - a); }
};

class DoobTree {
public:
    DoobTree(MonotoneFn f, DoobConfig cfg, bool strictly_increasing = false)
        : cfg_(std::move(cfg)) {
        cfg_.validate();
        if (!f.exact()) throw NotExact("doob tree requires an exact function");
        if (!f.monotone()) throw PreconditionViolated("doob tree requires a monotone function");
        if (strictly_increasing) {
            f_ = std::move(f);
        } else {
            // x -> f(x) + x makes a nondecreasing function strictly increasing
            MonotoneFn base = std::move(f);
            f_ = MonotoneFn([base](const Rat& q, unsigned p) { return base.value(q, p) + q; },
                            true, true, base.grid_base(), base.label() + " + x");
        }
        DoobNode root;
        root.a = 0;
        root.b = 1;
        root.fa = f_.value(Rat(0));
        root.fb = f_.value(Rat(1));
        if (!(root.fb > root.fa)) throw PreconditionViolated("f must increase on [0,1]");
        root.ga = 0;
        root.gb = 1;
        root.gamma = 1;
        root.state = DoobState::betting;
        nodes_.push_back(std::move(root));
        endpoints_[Rat(0)] = 0;
        endpoints_[Rat(1)] = 1;
    }

    const DoobNode& node(size_t idx) const { return nodes_.at(idx); }
    size_t size() const { return nodes_.size(); }
    const DoobConfig& config() const { return cfg_; }
    const MonotoneFn& f() const { return f_; }

    /// Expand a leaf per the four-case state machine; returns child indices and
    /// whether this expansion was a betting entry (non-betting -> betting switch).
    std::pair<std::vector<size_t>, bool> expand(size_t idx) {
        DoobNode& n = nodes_[idx];
        if (!n.children.empty()) return {n.children, false};
        if (n.filler) throw PreconditionViolated("filler nodes are not expanded");
        Rat S = n.slope_f();
        bool entry = false;
        DoobState child_state;
        bool proportional;
        std::vector<Piece> pieces;
        bool fresh = false;
        if (n.state == DoobState::betting) {
            if (S <= cfg_.gamma) {  // (I.a) keep betting
                child_state = DoobState::betting;
                proportional = true;
                fresh = (idx == 0);  // the root is the first betting entry
            } else {  // (I.b) switch to non-betting
                child_state = DoobState::non_betting;
                proportional = false;
            }
        } else {
            if (S < cfg_.beta) {  // (II.b) fresh betting entry
                child_state = DoobState::betting;
                proportional = true;
                fresh = true;
                entry = true;
            } else {  // (II.a) coast
                child_state = DoobState::non_betting;
                proportional = false;
            }
        }
        pieces = fresh ? greedy_split(n.a, n.b) : halve(n.a, n.b);
        Rat fa = n.fa, fb = n.fb, ga = n.ga, gb = n.gb;
        std::vector<size_t> kids;
        for (auto& [ca, cb, fill] : pieces) {
            DoobNode c;
            c.a = ca;
            c.b = cb;
            c.fa = f_.value(ca);
            c.fb = f_.value(cb);
            c.depth = n.depth + 1;
            c.filler = fill;
            c.state = fill ? DoobState::non_betting : child_state;
            if (proportional) {
                // g grows proportionally to f (equal slope ratios)
                c.ga = ga + (gb - ga) * (c.fa - fa) / (fb - fa);
                c.gb = ga + (gb - ga) * (c.fb - fa) / (fb - fa);
            } else {
                c.ga = ga + n.gamma * (ca - n.a);
                c.gb = ga + n.gamma * (cb - n.a);
            }
            c.gamma = (c.gb - c.ga) / (c.b - c.a);
            kids.push_back(nodes_.size());
            endpoints_[c.a] = c.ga;
            endpoints_[c.b] = c.gb;
            nodes_.push_back(std::move(c));
        }
        nodes_[idx].children = kids;
        return {kids, entry || (idx == 0)};
    }

    /// g at a materialized endpoint.
    Rat g_eval(const Rat& v) const {
        auto it = endpoints_.find(v);
        if (it == endpoints_.end()) throw DomainGap("endpoint not materialized");
        return it->second;
    }

    const std::map<Rat, Rat>& endpoints() const { return endpoints_; }

    /// Extension value g(x) within 2^{-p}: expand along x until the bracketing
    /// interval's g-increment is <= 2^{-p}.
    Rat g_extend(const CauchyName& x, unsigned p, unsigned max_depth = 256) {
        size_t cur = 0;
        for (unsigned step = 0; step < max_depth; ++step) {
            const DoobNode& n = nodes_[cur];
            if (n.gb - n.ga <= pow2_neg(p)) return n.ga;
            auto [kids, _] = expand(cur);
            cur = child_containing(kids, x, n.depth);
        }
        throw DepthExceeded("g increment still " + rat_str(nodes_[cur].gb - nodes_[cur].ga) +
                            " at depth budget");
    }

    struct TraceStep {
        Rat a, b;
        DoobState state;
        Rat gamma;
        Rat slope_f;
        bool entry = false;
    };

    /// Follow the unique path containing z, recording (interval, state, Gamma);
    /// stops after `cycles` betting entries. Asserts Gamma >= alpha^n at the
    /// (n+1)-st entry. Throws Stalled when the budget passes with no state change.
    std::vector<TraceStep> run_strategy(const CauchyName& z, unsigned cycles,
                                        unsigned max_steps = 512) {
        std::vector<TraceStep> trace;
        size_t cur = 0;
        unsigned entries = 0;
        bool state_changed = false;
        DoobState prev_state = DoobState::betting;
        for (unsigned step = 0; step < max_steps; ++step) {
            const DoobNode n = nodes_[cur];
            auto [kids, entry] = expand(cur);
            if (n.state != prev_state) state_changed = true;
            prev_state = n.state;
            TraceStep ts{n.a, n.b, n.state, n.gamma, n.slope_f(), entry};
            trace.push_back(ts);
            if (entry) {
                ++entries;
                // growth bound: at the (n+1)-st entry, Gamma >= alpha^n
                Rat bound = 1;
                for (unsigned i = 1; i < entries; ++i) bound *= cfg_.alpha;
                if (n.gamma < bound)
                    throw PropertyViolation("entry " + std::to_string(entries) +
                                            ": Gamma below alpha^" + std::to_string(entries - 1));
                if (entries >= cycles) return trace;
            }
            cur = child_containing(kids, z, n.depth);
        }
        if (!state_changed && entries <= 1)
            throw Stalled("no state change within " + std::to_string(max_steps) + " expansions");
        return trace;
    }

private:
    size_t child_containing(const std::vector<size_t>& kids, const CauchyName& z,
                            unsigned depth) const {
        unsigned p = depth + 8;
        Rat zq = z.approx(p);
        Rat tol = pow2_neg(p);
        for (size_t k : kids) {
            const DoobNode& c = nodes_[k];
            if (c.a <= zq + tol && zq - tol <= c.b && !c.filler) return k;
        }
        // ties may fall in a filler gap at this approximation; take any overlapping child
        for (size_t k : kids) {
            const DoobNode& c = nodes_[k];
            if (c.a <= zq + tol && zq - tol <= c.b) return k;
        }
        throw PrecisionUnavailable("no child brackets z at depth " + std::to_string(depth));
    }

    struct Piece {
        Rat a, b;
        bool filler = false;
    };

    static std::vector<Piece> halve(const Rat& a, const Rat& b) {
        Rat mid = (a + b) / 2;
        return {{a, mid, false}, {mid, b, false}};
    }

    /// Whitney-style greedy partition of [a,b] into disjoint (p,q)-intervals,
    /// largest scale first (capped at |A|/2); gaps below the cutoff become filler.
    std::vector<Piece> greedy_split(const Rat& a, const Rat& b) {
        const Rat p = cfg_.pq_p;
        const Rat q = cfg_.pq_q;
        unsigned n = 0;
        while (p * pow2_neg(n) > (b - a) / 2) ++n;
        unsigned n_cut = n + 24;
        std::vector<Piece> placed;
        std::vector<std::pair<Rat, Rat>> gaps{{a, b}};
        for (; n <= n_cut && !gaps.empty(); ++n) {
            Rat cell = p * pow2_neg(n);
            std::vector<std::pair<Rat, Rat>> next_gaps;
            for (auto& [ga, gb] : gaps) {
                Int i_min = rat_ceil((ga - q) / cell);
                Int i_max = rat_floor((gb - q) / cell) - 1;
                if (i_max < i_min) {
                    next_gaps.emplace_back(ga, gb);
                    continue;
                }
                Rat lo = Rat(i_min) * cell + q;
                Rat hi = Rat(i_max + 1) * cell + q;
                for (Int i = i_min; i <= i_max; ++i)
                    placed.push_back({Rat(i) * cell + q, Rat(i + 1) * cell + q, false});
                if (lo > ga) next_gaps.emplace_back(ga, lo);
                if (hi < gb) next_gaps.emplace_back(hi, gb);
            }
            gaps = std::move(next_gaps);
        }
        if (placed.empty()) throw SplitBudgetExceeded("no admissible (p,q)-interval fits");
        for (auto& [ga, gb] : gaps) placed.push_back({ga, gb, true});
        std::sort(placed.begin(), placed.end(),
                  [](const Piece& l, const Piece& r) { return l.a < r.a; });
        return placed;
    }

    MonotoneFn f_;
    DoobConfig cfg_;
    std::vector<DoobNode> nodes_;
    std::map<Rat, Rat> endpoints_;
};

// ---- Staircase fixture ----------------------------------------------------------

/// Path capital schedule along the binary digits of 1/3 (0101...): warmup 1, 15/8,
/// 225/64, then six-level cycles (1/8) (15/8)^j, j = 0..5. Every up-step ratio is
/// 15/8 < 2, so off-path siblings 2 c_n - c_{n+1} stay positive; the slope along the
/// target enters betting below beta = 1/2 and exits above gamma = 2 once per cycle.
inline Rat staircase_path_value(unsigned n) {
    static const Rat r(15, 8);
    if (n == 0) return Rat(1);
    if (n == 1) return r;
    if (n == 2) return r * r;
    unsigned phase = (n - 3) % 6;
    Rat v(1, 8);
    for (unsigned j = 0; j < phase; ++j) v *= r;
    return v;
}

/// Exact base-2 martingale realizing the schedule: on-path value c_n, the off-path
/// child at a divergence keeps the sibling value 2 c_j - c_{j+1} forever, constant
/// below depth 64.
inline Martingale staircase_martingale(unsigned depth_cap = 64) {
    auto eval = [depth_cap](const DigitString& s, unsigned) -> Rat {
        size_t len = std::min<size_t>(s.size(), depth_cap);
        for (size_t j = 0; j < len; ++j) {
            int zbit = static_cast<int>(j % 2);  // 1/3 = 0.0101...
            if (s.digits[j] != zbit)
                return 2 * staircase_path_value(static_cast<unsigned>(j)) -
                       staircase_path_value(static_cast<unsigned>(j) + 1);
        }
        return staircase_path_value(static_cast<unsigned>(len));
    };
    return Martingale(2, std::move(eval), true, "staircase").with_constant_below(depth_cap);
}

/// The fixture function: strictly increasing, piecewise linear, exact everywhere.
inline MonotoneFn staircase_fn() { return fcn(staircase_martingale()); }

inline DoobConfig staircase_config() {
    DoobConfig cfg;
    cfg.beta_tilde = Rat(1, 4);
    cfg.gamma_tilde = Rat(4);
    cfg.alpha = Rat(5, 4);
    cfg.beta = Rat(1, 2);
    cfg.gamma = Rat(2);
    cfg.K = 4;
    cfg.validate();
    return cfg;
}

}  // namespace dini
