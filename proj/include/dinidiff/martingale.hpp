#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace dini {

/// A finite string of digits in base k.
struct DigitString {
    int base = 2;
    std::vector<int> digits;

    DigitString() = default;
    DigitString(int k, std::vector<int> d) : base(k), digits(std::move(d)) {
        if (base < 2) throw PreconditionViolated("base must be >= 2");
        for (int x : digits)
            if (x < 0 || x >= base) throw PreconditionViolated("digit out of range for base");
    }

    static DigitString parse(int base, const std::string& s) {
        std::vector<int> d;
        d.reserve(s.size());
        for (char c : s) {
            if (c < '0' || c >= '0' + base)
                throw PreconditionViolated(std::string("bad digit '") + c + "'");
            d.push_back(c - '0');
        }
        return DigitString(base, std::move(d));
    }

    size_t size() const { return digits.size(); }
    DigitString child(int b) const {
        DigitString r = *this;
        r.digits.push_back(b);
        return r;
    }
    DigitString prefix(size_t n) const {
        DigitString r = *this;
        r.digits.resize(n);
        return r;
    }
    std::string str() const {
        std::string s;
        for (int d : digits) s += char('0' + d);
        return s;
    }
    /// Value of 0.sigma in base k: one normalization instead of a rational per digit.
    Rat left_endpoint() const {
        Int num = 0;
        for (int d : digits) num = num * base + d;
        return Rat(num, pow_int(static_cast<unsigned>(base), static_cast<unsigned>(digits.size())));
    }
    bool operator<(const DigitString& o) const {
        return std::tie(base, digits) < std::tie(o.base, o.digits);
    }
};

/// Base-k martingale: nonnegative capital on digit strings with the fairness law
/// sum_i M(sigma i) = k * M(sigma). eval(sigma, p) approximates M(sigma) within 2^{-p};
/// when `exact` is set the returned value is M(sigma) itself for every p.
class Martingale {
public:
    using Eval = std::function<Rat(const DigitString&, unsigned)>;

    /// Per-digit capital factor: M(sigma b) = M(sigma) * factor(sigma, b).
    using Factor = std::function<Rat(const std::vector<int>&, int)>;

    Martingale() = default;
    Martingale(int base, Eval eval, bool exact, std::string label = {})
        : base_(base),
          eval_(std::move(eval)),
          exact_(exact),
          label_(std::move(label)),
          cache_(std::make_shared<Cache>()) {}

    /// Multiplicative strategy: exact, evaluated incrementally from the longest
    /// cached prefix (keeps deep path evaluation O(1) amortized per node).
    static Martingale from_factors(int base, Rat init, Factor factor, std::string label = {}) {
        Martingale m(base, Eval{}, true, std::move(label));
        m.init_ = std::move(init);
        m.factor_ = std::move(factor);
        return m;
    }

    int base() const { return base_; }
    bool exact() const { return exact_; }
    const std::string& label() const { return label_; }

    /// Depth d such that M(sigma tau) = M(sigma) for all |sigma| >= d, when known.
    /// Makes the induced measure uniform inside depth-d cells.
    std::optional<unsigned> constant_below() const { return constant_below_; }
    Martingale with_constant_below(unsigned d) const {
        Martingale m = *this;
        m.constant_below_ = d;
        return m;
    }

    Rat eval(const DigitString& sigma, unsigned p = 0) const {
        if (sigma.base != base_) throw BaseMismatch("digit string base != martingale base");
        if (exact_) p = 0;  // value is p-independent
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto key = std::make_pair(sigma.digits, p);
        auto it = cache_->memo.find(key);
        if (it != cache_->memo.end()) return it->second;
        Rat v;
        if (factor_) {
            // walk back to the longest cached ancestor, then extend forward
            Rat base_val = init_;
            size_t from = 0;
            auto anc = key;
            while (!anc.first.empty()) {
                anc.first.pop_back();
                auto hit = cache_->memo.find(anc);
                if (hit != cache_->memo.end()) {
                    base_val = hit->second;
                    from = anc.first.size();
                    break;
                }
            }
            v = base_val;
            std::vector<int> seen(sigma.digits.begin(), sigma.digits.begin() + from);
            for (size_t j = from; j < sigma.digits.size(); ++j) {
                v *= factor_(seen, sigma.digits[j]);
                seen.push_back(sigma.digits[j]);
                cache_->memo.emplace(std::make_pair(seen, 0u), v);
            }
        } else {
            v = eval_(sigma, p);
            cache_->memo.emplace(std::move(key), v);
        }
        return v;
    }

    Rat initial() const { return eval(DigitString(base_, {})); }

    // ---- Builtin strategies --------------------------------------------------

    static Martingale constant(int k, const Rat& c) {
        return from_factors(k, c, [](const std::vector<int>&, int) { return Rat(1); },
                            "constant " + rat_str(c))
            .with_constant_below(0);
    }

    /// Bets all capital on digit d each step: capital k^{|sigma|} along d^n, else 0.
    static Martingale doubler(int k, int d) {
        return from_factors(k, 1,
                            [k, d](const std::vector<int>&, int b) { return Rat(b == d ? k : 0); },
                            "doubler on " + std::to_string(d));
    }

    /// Bets fraction f of capital on the digit predicted by `predict` (a pure function
    /// of the seen prefix). Correct: capital *= 1 + (k-1) f; wrong: *= 1 - f.
    static Martingale predictor(int k, const Rat& f,
                                std::function<int(const std::vector<int>&)> predict,
                                std::string label = "predictor") {
        if (f < 0 || f > 1) throw PreconditionViolated("betting fraction must be in [0,1]");
        return from_factors(
            k, 1,
            [k, f, predict = std::move(predict)](const std::vector<int>& seen, int b) {
                return b == predict(seen) ? Rat(1 + (k - 1) * f) : Rat(1 - f);
            },
            std::move(label));
    }

    static Martingale predict_constant(int k, const Rat& f, int digit) {
        return predictor(k, f, [digit](const std::vector<int>&) { return digit; },
                         "predict " + std::to_string(digit));
    }

    /// Predicts the opposite of the last digit seen (first guess: `first`).
    static Martingale predict_alternating(int k, const Rat& f, int first = 1) {
        return predictor(
            k, f,
            [k, first](const std::vector<int>& seen) {
                return seen.empty() ? first : (k - 1 - seen.back());
            },
            "predict alternation");
    }

    /// Predicts a repeat of the last digit seen (first guess: `first`).
    static Martingale predict_repeat(int k, const Rat& f, int first = 0) {
        return predictor(k, f,
                         [first](const std::vector<int>& seen) {
                             return seen.empty() ? first : seen.back();
                         },
                         "predict repeat");
    }

    /// Explicit table of values up to depth d; below the table, constant extension
    /// M(sigma tau) = M(sigma). The table must itself be fair; this is validated.
    static Martingale from_table(int k, unsigned depth, std::map<std::vector<int>, Rat> table) {
        auto tbl = std::make_shared<std::map<std::vector<int>, Rat>>(std::move(table));
        // validate fairness and nonnegativity of the table
        std::vector<std::vector<int>> level{{}};
        for (unsigned n = 0; n < depth; ++n) {
            std::vector<std::vector<int>> next;
            for (auto& s : level) {
                auto pit = tbl->find(s);
                if (pit == tbl->end()) throw PreconditionViolated("table missing entry");
                if (pit->second < 0) throw PreconditionViolated("negative table value");
                Rat sum = 0;
                for (int b = 0; b < k; ++b) {
                    auto c = s;
                    c.push_back(b);
                    auto it = tbl->find(c);
                    if (it == tbl->end()) throw PreconditionViolated("table missing entry");
                    if (it->second < 0) throw PreconditionViolated("negative table value");
                    sum += it->second;
                    next.push_back(std::move(c));
                }
                if (sum != k * pit->second) throw PreconditionViolated("table is not fair");
            }
            level = std::move(next);
        }
        return Martingale(
                   k,
                   [tbl, depth](const DigitString& s, unsigned) {
                       auto key = s.digits;
                       if (key.size() > depth) key.resize(depth);
                       return tbl->at(key);
                   },
                   true, "table")
            .with_constant_below(depth);
    }

private:
    struct Cache {
        std::mutex mu;
        std::map<std::pair<std::vector<int>, unsigned>, Rat> memo;
    };
    int base_ = 2;
    Eval eval_;
    Rat init_;
    Factor factor_;
    std::optional<unsigned> constant_below_;
    bool exact_ = false;
    std::string label_;
    std::shared_ptr<Cache> cache_;
};

// ---- Normalization and the savings transform --------------------------------

/// L'(sigma) = (L(sigma) + 1) / (L(<>)+ 2): positive everywhere, L'(<>) < 1,
/// succeeds on exactly the sequences L succeeds on.
inline Martingale normalize(const Martingale& L) {
    if (!L.exact()) throw NotExact("normalize requires an exact martingale");
    if (L.base() != 2) throw BaseMismatch("normalize is defined for base 2");
    Rat denom = L.initial() + 2;
    return Martingale(
        2, [L, denom](const DigitString& s, unsigned) { return (L.eval(s) + 1) / denom; },
        true, "normalized " + L.label());
}

/// Savings/checking decomposition M = G + E of a positive base-2 martingale with
/// L(<>) < 1: E bets with L's factors; whenever the post-bet value exceeds 1,
/// one unit moves to the savings balance G.
class SavingsMartingale {
public:
    explicit SavingsMartingale(Martingale L)
        : L_(std::move(L)), cache_(std::make_shared<Cache>()) {
        if (!L_.exact()) throw NotExact("savings transform requires an exact martingale");
        if (L_.base() != 2) throw BaseMismatch("savings transform is defined for base 2");
        if (L_.initial() >= 1)
            throw PreconditionViolated("savings transform requires L(<>) < 1 (normalize first)");
    }

    struct Balances {
        Int savings;   // G
        Rat checking;  // E
        Rat total() const { return Rat(savings) + checking; }
    };

    Balances balances(const DigitString& sigma) const {
        if (sigma.base != 2) throw BaseMismatch("savings martingale is base 2");
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto it = cache_->memo.find(sigma.digits);
        if (it != cache_->memo.end()) return it->second;
        // extend from the longest cached ancestor
        Balances bal{0, L_.initial()};
        size_t from = 0;
        auto anc = sigma.digits;
        while (!anc.empty()) {
            anc.pop_back();
            auto hit = cache_->memo.find(anc);
            if (hit != cache_->memo.end()) {
                bal = hit->second;
                from = anc.size();
                break;
            }
        }
        DigitString prefix = sigma.prefix(from);
        Rat lcur = L_.eval(prefix);
        if (lcur <= 0) throw PreconditionViolated("savings transform requires L > 0");
        for (size_t j = from; j < sigma.digits.size(); ++j) {
            DigitString next = prefix.child(sigma.digits[j]);
            Rat lnext = L_.eval(next);
            if (lnext <= 0) throw PreconditionViolated("savings transform requires L > 0");
            Rat v = bal.checking * lnext / lcur;
            if (v > 1) {
                bal.savings += 1;
                bal.checking = v - 1;
            } else {
                bal.checking = v;
            }
            prefix = std::move(next);
            lcur = std::move(lnext);
            cache_->memo.emplace(prefix.digits, bal);
        }
        return bal;
    }

    /// The combined capital M = G + E as an exact martingale.
    Martingale martingale() const {
        auto self = *this;
        return Martingale(
            2, [self](const DigitString& s, unsigned) { return self.balances(s).total(); },
            true, "savings of " + L_.label());
    }

    const Martingale& underlying() const { return L_; }

private:
    struct Cache {
        std::mutex mu;
        std::map<std::vector<int>, Balances> memo;
    };
    Martingale L_;
    std::shared_ptr<Cache> cache_;
};

inline SavingsMartingale savings_transform(const Martingale& L) { return SavingsMartingale(L); }

// ---- Traces and fairness checks ---------------------------------------------

/// Capital along the first N digits of Z: entry n approximates M(Z|n) within 2^{-p}.
inline std::vector<Rat> capital_trace(const Martingale& M, const DigitString& Z, size_t N,
                                      unsigned p = 0) {
    if (Z.base != M.base()) throw BaseMismatch("trace digits base != martingale base");
    if (Z.size() < N) throw PreconditionViolated("digit string too short for trace");
    std::vector<Rat> out;
    out.reserve(N + 1);
    for (size_t n = 0; n <= N; ++n) out.push_back(M.eval(Z.prefix(n), p));
    return out;
}

struct FairnessViolation {
    DigitString sigma;
    Rat children_sum;
    Rat parent;
};

struct FairnessReport {
    unsigned depth = 0;
    unsigned long long checked = 0;
    std::vector<FairnessViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Verify sum_i M(sigma i) = k M(sigma) for all |sigma| < depth; exact equality for
/// exact martingales, tolerance (k+2) 2^{-p} otherwise.
inline FairnessReport check_fairness(const Martingale& M, unsigned depth, unsigned p = 0) {
    FairnessReport rep;
    rep.depth = depth;
    int k = M.base();
    Rat tol = M.exact() ? Rat(0) : Rat(k + 2) * pow2_neg(p);
    std::vector<DigitString> level{DigitString(k, {})};
    for (unsigned n = 0; n < depth; ++n) {
        std::vector<DigitString> next;
        next.reserve(level.size() * k);
        for (auto& s : level) {
            Rat parent = M.eval(s, p);
            Rat sum = 0;
            for (int b = 0; b < k; ++b) {
                auto c = s.child(b);
                sum += M.eval(c, p);
                next.push_back(std::move(c));
            }
            ++rep.checked;
            if (rat_abs(sum - Rat(k) * parent) > tol)
                rep.violations.push_back({s, sum, parent});
        }
        level = std::move(next);
    }
    return rep;
}

}  // namespace dini
