#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cauchy.hpp"
#include "correspondence.hpp"
#include "diffpoint.hpp"
#include "doobtree.hpp"
#include "errors.hpp"
#include "martingale.hpp"
#include "ratfn.hpp"
#include "rational.hpp"
#include "sawtooth.hpp"

namespace dini {

using json = nlohmann::json;

/// Decimal rendering by long division; never touches binary floats.
inline std::string decimal_display(const Rat& q, unsigned digits = 10) {
    Int num = numerator(q), den = denominator(q);
    std::string s;
    if (num < 0) {
        s = "-";
        num = -num;
    }
    s += Int(num / den).str();
    num %= den;
    if (num != 0) {
        s += '.';
        for (unsigned i = 0; i < digits && num != 0; ++i) {
            num *= 10;
            s += Int(num / den).str();
            num %= den;
        }
        if (num != 0) s += "...";
    }
    return s;
}

/// Emit a rational as the exact "num/den" string plus a display-only decimal.
inline void put_rat(json& obj, const std::string& key, const Rat& q) {
    obj[key] = rat_str(q);
    obj[key + "_display_only"] = decimal_display(q);
}

inline Rat rat_at(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) throw UsageError("missing field at " + ptr + "/" + key);
    if (!j.at(key).is_string() && !j.at(key).is_number_integer())
        throw UsageError("expected rational string at " + ptr + "/" + key);
    try {
        if (j.at(key).is_number_integer()) return Rat(Int(j.at(key).get<long long>()));
        return parse_rational(j.at(key).get<std::string>());
    } catch (const UsageError& e) {
        throw UsageError(std::string(e.what()) + " at " + ptr + "/" + key);
    }
}

inline int int_at(const json& j, const std::string& key, const std::string& ptr,
                  bool required = true, int fallback = 0) {
    if (!j.contains(key)) {
        if (required) throw UsageError("missing field at " + ptr + "/" + key);
        return fallback;
    }
    if (!j.at(key).is_number_integer())
        throw UsageError("expected integer at " + ptr + "/" + key);
    return j.at(key).get<int>();
}

inline std::string str_at(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) throw UsageError("missing field at " + ptr + "/" + key);
    if (!j.at(key).is_string()) throw UsageError("expected string at " + ptr + "/" + key);
    return j.at(key).get<std::string>();
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("invalid JSON in " + path + ": " + e.what());
    }
}

// ---- descriptors -----------------------------------------------------------------

inline Martingale martingale_from_json(const json& j, const std::string& ptr = "");
inline MonotoneFn function_from_json(const json& j, const std::string& ptr = "");

inline Martingale martingale_from_json(const json& j, const std::string& ptr) {
    if (!j.is_object()) throw UsageError("expected object at " + ptr);
    std::string kind = str_at(j, "kind", ptr);
    if (kind == "constant") {
        int k = int_at(j, "base", ptr, false, 2);
        return Martingale::constant(k, rat_at(j, "value", ptr));
    }
    if (kind == "doubler") {
        int k = int_at(j, "base", ptr, false, 2);
        return Martingale::doubler(k, int_at(j, "digit", ptr, false, 0));
    }
    if (kind == "predictor") {
        int k = int_at(j, "base", ptr, false, 2);
        Rat f = rat_at(j, "fraction", ptr);
        std::string rule = str_at(j, "rule", ptr);
        if (rule == "constant")
            return Martingale::predict_constant(k, f, int_at(j, "digit", ptr, false, 0));
        if (rule == "alternating")
            return Martingale::predict_alternating(k, f, int_at(j, "digit", ptr, false, 1));
        if (rule == "repeat")
            return Martingale::predict_repeat(k, f, int_at(j, "digit", ptr, false, 0));
        throw UsageError("unknown predictor rule at " + ptr + "/rule");
    }
    if (kind == "table") {
        int k = int_at(j, "base", ptr, false, 2);
        unsigned depth = static_cast<unsigned>(int_at(j, "depth", ptr));
        if (!j.contains("values") || !j.at("values").is_object())
            throw UsageError("missing table at " + ptr + "/values");
        std::map<std::vector<int>, Rat> table;
        for (auto it = j.at("values").begin(); it != j.at("values").end(); ++it) {
            DigitString s = DigitString::parse(k, it.key());
            table[s.digits] = parse_rational(it.value().get<std::string>());
        }
        return Martingale::from_table(k, depth, std::move(table));
    }
    if (kind == "staircase") return staircase_martingale();
    if (kind == "normalized") {
        if (!j.contains("inner")) throw UsageError("missing field at " + ptr + "/inner");
        return normalize(martingale_from_json(j.at("inner"), ptr + "/inner"));
    }
    if (kind == "savings") {
        if (!j.contains("inner")) throw UsageError("missing field at " + ptr + "/inner");
        Martingale L = martingale_from_json(j.at("inner"), ptr + "/inner");
        if (L.initial() >= 1) L = normalize(L);
        return SavingsMartingale(L).martingale();
    }
    if (kind == "mart") {
        if (!j.contains("function")) throw UsageError("missing field at " + ptr + "/function");
        int k = int_at(j, "base", ptr, false, 2);
        return mart(function_from_json(j.at("function"), ptr + "/function"), k);
    }
    throw UsageError("unknown martingale kind '" + kind + "' at " + ptr);
}

inline EffectiveCover cover_from_json(const json& j, const std::string& ptr = "") {
    if (j.is_string() && j.get<std::string>() == "fixture") return sawtooth_fixture_cover();
    if (!j.is_object() || !j.contains("levels") || !j.at("levels").is_array())
        throw UsageError("expected cover {levels: [...]} at " + ptr);
    EffectiveCover cover;
    size_t m = 0;
    for (const auto& lvl : j.at("levels")) {
        std::string lp = ptr + "/levels/" + std::to_string(m++);
        if (!lvl.is_array()) throw UsageError("expected array at " + lp);
        std::vector<CoverInterval> row;
        size_t i = 0;
        for (const auto& iv : lvl) {
            std::string ip = lp + "/" + std::to_string(i++);
            row.push_back({rat_at(iv, "a", ip), rat_at(iv, "b", ip)});
        }
        cover.levels.push_back(std::move(row));
    }
    return cover;
}

inline MonotoneFn function_from_json(const json& j, const std::string& ptr) {
    if (!j.is_object()) throw UsageError("expected object at " + ptr);
    std::string kind = str_at(j, "kind", ptr);
    if (kind == "identity") return MonotoneFn::identity();
    if (kind == "staircase") return staircase_fn();
    if (kind == "vee")
        // |x - 1/2|: the standard bounded-variation non-monotone probe
        return MonotoneFn(
            [](const Rat& q, unsigned) { return rat_abs(q - Rat(1, 2)); }, true, false, 0, "vee");
    if (kind == "square")
        return MonotoneFn([](const Rat& q, unsigned) { return Rat(q * q); }, true, true, 0,
                          "square");
    if (kind == "ramp")
        return sawtooth_integral(rat_at(j, "a", ptr), rat_at(j, "b", ptr), rat_at(j, "p", ptr));
    if (kind == "mixture") {
        if (!j.contains("base")) throw UsageError("missing field at " + ptr + "/base");
        std::vector<MonotoneFn> terms;
        if (j.contains("terms")) {
            size_t i = 0;
            for (const auto& t : j.at("terms"))
                terms.push_back(function_from_json(t, ptr + "/terms/" + std::to_string(i++)));
        }
        unsigned k0 = static_cast<unsigned>(int_at(j, "k0", ptr, false, 8));
        return mix_functions(function_from_json(j.at("base"), ptr + "/base"), terms, k0).g;
    }
    if (kind == "fcn") {
        if (!j.contains("martingale")) throw UsageError("missing field at " + ptr + "/martingale");
        Martingale M = martingale_from_json(j.at("martingale"), ptr + "/martingale");
        return fcn(M, savings_bound(M));
    }
    if (kind == "sawtooth") {
        if (!j.contains("cover")) throw UsageError("missing field at " + ptr + "/cover");
        auto F = std::make_shared<SawtoothFunction>(
            refine(cover_from_json(j.at("cover"), ptr + "/cover")));
        return MonotoneFn([F](const Rat& q, unsigned) { return F->value(q); }, true, false, 0,
                          "sawtooth");
    }
    throw UsageError("unknown function kind '" + kind + "' at " + ptr);
}

// ---- builtin reals -----------------------------------------------------------------

inline CauchyName builtin_real(const std::string& name) {
    if (name == "third") return CauchyName::of_rational(Rat(1, 3), "third");
    if (name == "champernowne2") return champernowne2_name();
    if (name == "sqrt2half") return sqrt2_half_name();
    if (name.find_first_not_of("0123456789/-") == std::string::npos && !name.empty())
        return CauchyName::of_rational(parse_rational(name), name);
    throw UnknownName("no builtin real named '" + name + "'");
}

/// Exact digit stream of a builtin real in the given base. Rationals use long
/// division; champernowne2 streams its defining bits; other names fall back to the
/// separation-certified expansion.
inline DigitString real_digits(const std::string& name, int base, unsigned n,
                               const Rat& separation = Rat(1, 64)) {
    if (name == "champernowne2") {
        if (base != 2) throw UsageError("champernowne2 digits are defined in base 2");
        return DigitString::parse(2, champernowne2_bits(n));
    }
    if (name.find_first_not_of("0123456789/-") == std::string::npos && !name.empty()) {
        Rat x = parse_rational(name);
        if (x < 0 || x >= 1) throw UsageError("digit expansion needs a real in [0,1)");
        std::vector<int> d;
        for (unsigned i = 0; i < n; ++i) {
            x *= base;
            Int b = rat_floor(x);
            d.push_back(static_cast<int>(b));
            x -= Rat(b);
        }
        return DigitString(base, std::move(d));
    }
    if (base != 2) throw UsageError("expansion of named irrationals is supported in base 2");
    return DigitString::parse(2, binary_expansion_prefix(builtin_real(name), n, separation));
}

}  // namespace dini
