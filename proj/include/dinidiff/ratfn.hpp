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

/// A function on [0,1] given by certified rational values: value(q, p) approximates
/// f(q) within 2^{-p}. Flags: `exact` (value is f(q) itself wherever defined, or on
/// the native base-k grid when grid_base > 0), `monotone` (nondecreasing).
class RationalFn {
public:
    using Eval = std::function<Rat(const Rat&, unsigned)>;

    RationalFn() = default;
    RationalFn(Eval eval, bool exact, bool monotone, int grid_base, std::string label = {})
        : eval_(std::move(eval)),
          exact_(exact),
          monotone_(monotone),
          grid_base_(grid_base),
          label_(std::move(label)),
          cache_(std::make_shared<Cache>()) {}

    Rat value(const Rat& q, unsigned p = 0) const {
        if (!eval_) throw DomainGap("uninitialized function");
        if (exact_ && grid_base_ == 0) p = 0;
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto key = std::make_pair(q, p);
        auto it = cache_->memo.find(key);
        if (it != cache_->memo.end()) return it->second;
        Rat v = eval_(q, p);
        cache_->memo.emplace(std::move(key), v);
        return v;
    }

    bool exact() const { return exact_; }
    bool monotone() const { return monotone_; }
    /// 0: exact on all rationals (when exact); k > 0: native grid is i * k^{-n}.
    int grid_base() const { return grid_base_; }
    const std::string& label() const { return label_; }

    static RationalFn exact_fn(std::function<Rat(const Rat&)> f, std::string label = {},
                               bool monotone = false) {
        return RationalFn([f = std::move(f)](const Rat& q, unsigned) { return f(q); }, true,
                          monotone, 0, std::move(label));
    }

    static RationalFn identity() {
        return exact_fn([](const Rat& q) { return q; }, "identity", true);
    }

private:
    // order keys by (p, den, num): integer comparisons on the canonical form instead
    // of the cross-multiplying rational operator<
    struct KeyLess {
        bool operator()(const std::pair<Rat, unsigned>& a,
                        const std::pair<Rat, unsigned>& b) const {
            if (a.second != b.second) return a.second < b.second;
            const Int &ad = denominator(a.first), &bd = denominator(b.first);
            if (ad != bd) return ad < bd;
            return numerator(a.first) < numerator(b.first);
        }
    };
    struct Cache {
        std::mutex mu;
        std::map<std::pair<Rat, unsigned>, Rat, KeyLess> memo;
    };
    Eval eval_;
    bool exact_ = false;
    bool monotone_ = false;
    int grid_base_ = 0;
    std::string label_;
    std::shared_ptr<Cache> cache_;
};

using MonotoneFn = RationalFn;

}  // namespace dini
