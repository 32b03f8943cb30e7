#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "budget.hpp"
#include "jsonio.hpp"
#include "linterval.hpp"
#include "slopes.hpp"

namespace dini {

namespace cli_detail {

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    out << text;
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw UsageError("cannot write " + out_path);
        f << text;
    }
}

inline void emit_json(const json& report, const std::string& out_path, std::ostream& out) {
    emit(report.dump(2) + "\n", out_path, out);
}

inline int cmd_fairness(const std::string& mpath, unsigned depth, unsigned precision,
                        bool transforms, const std::string& out_path, std::ostream& out) {
    Martingale M = martingale_from_json(load_json(mpath));
    struct Item {
        std::string label;
        Martingale M;
    };
    std::vector<Item> items{{M.label(), M}};
    if (transforms && M.exact() && M.base() == 2) {
        Martingale L = M.initial() >= 1 ? normalize(M) : M;
        items.push_back({"normalized", L});
        items.push_back({"savings", SavingsMartingale(L).martingale()});
    }
    json report;
    report["command"] = "fairness";
    report["depth"] = depth;
    bool all_ok = true;
    json rows = json::array();
    for (auto& it : items) {
        FairnessReport rep = check_fairness(it.M, depth, precision);
        json row;
        row["label"] = it.label;
        row["base"] = it.M.base();
        row["exact"] = it.M.exact();
        row["checked"] = rep.checked;
        row["ok"] = rep.ok();
        if (!rep.ok()) {
            all_ok = false;
            json v;
            v["sigma"] = rep.violations.front().sigma.str();
            put_rat(v, "children_sum", rep.violations.front().children_sum);
            put_rat(v, "parent", rep.violations.front().parent);
            row["first_violation"] = v;
        }
        rows.push_back(row);
    }
    report["reports"] = rows;
    report["ok"] = all_ok;
    emit_json(report, out_path, out);
    return all_ok ? 0 : 1;
}

inline int cmd_savings(const std::string& mpath, unsigned depth, const std::string& out_path,
                       std::ostream& out) {
    Martingale L = martingale_from_json(load_json(mpath));
    if (L.initial() >= 1) L = normalize(L);
    SavingsMartingale S(L);
    Martingale M = S.martingale();
    Rat m0 = M.initial();
    bool savings_ok = true, eq32_ok = true;
    Rat min_slack;
    bool have_slack = false;
    unsigned long long checked = 0;
    // DFS with the running max along each path: the savings property says no later value may fall
    // more than 2 below any earlier one
    struct Frame {
        DigitString s;
        Rat path_max;
    };
    std::vector<Frame> stack{{DigitString(2, {}), m0}};
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        Rat v = M.eval(fr.s);
        ++checked;
        if (v > Rat(2 * Int(fr.s.size())) + m0) eq32_ok = false;
        Rat slack = v - (fr.path_max - 2);
        if (!have_slack || slack < min_slack) {
            min_slack = slack;
            have_slack = true;
        }
        if (slack < 0) savings_ok = false;
        if (fr.s.size() < depth) {
            Rat mx = std::max(fr.path_max, v);
            stack.push_back({fr.s.child(0), mx});
            stack.push_back({fr.s.child(1), mx});
        }
    }
    json report;
    report["command"] = "savings";
    report["depth"] = depth;
    report["checked"] = checked;
    put_rat(report, "initial", m0);
    put_rat(report, "min_drop_slack", min_slack);
    report["savings_ok"] = savings_ok;
    report["growth_bound_ok"] = eq32_ok;
    report["ok"] = savings_ok && eq32_ok;
    emit_json(report, out_path, out);
    return savings_ok && eq32_ok ? 0 : 1;
}

inline int cmd_roundtrip(const std::string& mpath, unsigned depth, const std::string& out_path,
                         std::ostream& out) {
    Martingale M = martingale_from_json(load_json(mpath));
    RoundtripReport rep = roundtrip_check(M, depth, savings_bound(M));
    json report;
    report["command"] = "roundtrip";
    report["depth"] = depth;
    report["checked"] = rep.checked;
    report["ok"] = rep.ok();
    if (!rep.ok()) {
        json v;
        v["where"] = rep.mismatches.front().where;
        put_rat(v, "got", rep.mismatches.front().got);
        put_rat(v, "want", rep.mismatches.front().want);
        report["first_mismatch"] = v;
    }
    emit_json(report, out_path, out);
    return rep.ok() ? 0 : 1;
}

inline int cmd_base_convert(const std::string& mpath, int to, unsigned trunc, unsigned depth,
                            const std::string& out_path, std::ostream& out) {
    Martingale M = martingale_from_json(load_json(mpath));
    BaseConversion conv = base_convert(M, to, trunc);
    FairnessReport rep = check_fairness(conv.result, depth);
    json report;
    report["command"] = "base-convert";
    report["from_base"] = M.base();
    report["to_base"] = to;
    report["truncation_depth"] = conv.truncation_depth;
    put_rat(report, "error_bound", conv.error_bound);
    put_rat(report, "initial", conv.result.initial());
    report["fairness_depth"] = depth;
    report["fairness_checked"] = rep.checked;
    report["ok"] = rep.ok();
    emit_json(report, out_path, out);
    return rep.ok() ? 0 : 1;
}

inline int cmd_trace(const std::string& mpath, const std::string& real, unsigned digits,
                     const std::string& separation, const std::string& out_path,
                     std::ostream& out) {
    Martingale M = martingale_from_json(load_json(mpath));
    DigitString Z = real_digits(real, M.base(), digits, parse_rational(separation));
    std::vector<Rat> caps = capital_trace(M, Z, digits);
    json report;
    report["command"] = "trace";
    report["real"] = real;
    report["digits"] = Z.str();
    json rows = json::array();
    Rat mx = caps.front();
    for (size_t n = 0; n < caps.size(); ++n) {
        json row;
        row["n"] = n;
        put_rat(row, "capital", caps[n]);
        rows.push_back(row);
        if (caps[n] > mx) mx = caps[n];
    }
    report["capital"] = rows;
    put_rat(report, "max_capital", mx);
    emit_json(report, out_path, out);
    return 0;
}

inline json witness_json(const LIntervalWitness& w) {
    json a;
    a["n"] = w.n;
    put_rat(a, "eta", w.eta);
    put_rat(a, "p", w.p);
    a["M"] = w.M.str();
    a["i"] = w.i.str();
    a["v"] = w.v.str();
    put_rat(a, "left", w.A.left());
    put_rat(a, "right", w.A.right());
    a["reflected"] = w.reflected;
    a["protrudes"] = w.protrudes;
    return a;
}

inline int cmd_linterval(const std::string& alpha_s, const std::string& x_s,
                         const std::string& y_s, int exhaustive, bool inner,
                         const std::string& z_s, const std::string& out_path,
                         std::ostream& out) {
    Rat alpha = parse_rational(alpha_s);
    LSet L = build_L(alpha);
    json report;
    report["command"] = "linterval";
    put_rat(report, "alpha", alpha);
    report["k"] = L.k;
    report["L_size"] = L.L.size();
    if (exhaustive > 0) {
        unsigned n = static_cast<unsigned>(exhaustive);
        Int den = pow_int(2, n);
        Int half = den / 2;
        unsigned long long instances = 0, reflected = 0;
        for (Int i = 1; i < half; ++i)
            for (Int j = i + 1; j < half; ++j) {
                Rat x(i, den), y(j, den);
                LIntervalWitness w = outer_approx(L, x, y);
                if (!w.reflected) w.validate(x, y, alpha, L.k);
                ++instances;
                if (w.reflected) ++reflected;
            }
        report["exhaustive_depth"] = n;
        report["instances"] = instances;
        report["reflected"] = reflected;
        report["ok"] = true;
        emit_json(report, out_path, out);
        return 0;
    }
    if (x_s.empty() || y_s.empty()) throw UsageError("need --x and --y (or --exhaustive)");
    Rat x = parse_rational(x_s), y = parse_rational(y_s);
    if (inner) {
        std::optional<Rat> z;
        if (!z_s.empty()) z = parse_rational(z_s);
        InnerResult res = inner_approx(x, y, alpha, z);
        report["mode"] = "inner";
        report["inner_k"] = res.inner_L.k;
        report["witness"] = witness_json(res.witness);
        put_rat(report, "B_left", res.B.left());
        put_rat(report, "B_right", res.B.right());
        report["contains_z"] = res.contains_z;
    } else {
        LIntervalWitness w = outer_approx(L, x, y);
        if (!w.reflected) w.validate(x, y, alpha, L.k);
        report["mode"] = "outer";
        report["witness"] = witness_json(w);
    }
    report["ok"] = true;
    emit_json(report, out_path, out);
    return 0;
}

inline int cmd_doob(unsigned cycles, unsigned max_steps, const std::string& z_s,
                    const std::string& out_path, std::ostream& out) {
    DoobTree tree(staircase_fn(), staircase_config(), true);
    CauchyName z = builtin_real(z_s);
    json report;
    report["command"] = "doob";
    report["cycles_requested"] = cycles;
    try {
        auto trace = tree.run_strategy(z, cycles, max_steps);
        json rows = json::array();
        unsigned entries = 0;
        Rat last_gamma = 0;
        for (const auto& st : trace) {
            json row;
            put_rat(row, "a", st.a);
            put_rat(row, "b", st.b);
            row["state"] = st.state == DoobState::betting ? "betting" : "non-betting";
            put_rat(row, "gamma", st.gamma);
            put_rat(row, "slope", st.slope_f);
            row["entry"] = st.entry;
            if (st.entry) {
                ++entries;
                last_gamma = st.gamma;
            }
            rows.push_back(row);
        }
        report["trace"] = rows;
        report["entries"] = entries;
        put_rat(report, "gamma_at_last_entry", last_gamma);
        report["stalled"] = false;
    } catch (const Stalled& e) {
        report["stalled"] = true;
        report["detail"] = e.what();
    }
    emit_json(report, out_path, out);
    return 0;
}

inline int cmd_sawtooth(const std::string& mode, const std::string& cover_s,
                        const std::string& x_s, unsigned m, const std::string& out_path,
                        std::ostream& out) {
    json cov = cover_s == "fixture" ? json("fixture") : load_json(cover_s);
    EffectiveCover cover = cover_from_json(cov);
    SawtoothConstruction sc = refine(cover);
    json report;
    report["command"] = "sawtooth " + mode;
    if (mode == "build") {
        json rows = json::array();
        for (size_t lvl = 0; lvl < sc.C.size(); ++lvl) {
            json row;
            row["level"] = lvl;
            row["count"] = sc.C[lvl].size();
            put_rat(row, "first_length", sc.C[lvl].front().length());
            put_rat(row, "last_length", sc.C[lvl].back().length());
            put_rat(row, "measure", cover.level_measure(lvl));
            rows.push_back(row);
        }
        report["levels"] = rows;
        report["ok"] = true;
        emit_json(report, out_path, out);
        return 0;
    }
    SawtoothFunction F(std::move(sc));
    if (mode == "eval") {
        Rat x = parse_rational(x_s);
        put_rat(report, "x", x);
        report["m"] = m;
        put_rat(report, "value", F.value(x));
        put_rat(report, "approx", F.approx_value(x, m));
        report["ok"] = true;
        emit_json(report, out_path, out);
        return 0;
    }
    if (mode == "probe") {
        Rat z = parse_rational(x_s);
        auto w = F.nondiff_witness(z, m);
        put_rat(report, "z", z);
        report["m"] = m;
        put_rat(report, "h", w.h);
        put_rat(report, "slope", w.slope);
        put_rat(report, "bound", w.bound);
        put_rat(report, "slack", w.slack);
        report["half"] = w.left_half ? "left" : "right";
        bool ok = w.slope >= w.bound - w.slack;
        report["ok"] = ok;
        emit_json(report, out_path, out);
        return ok ? 0 : 1;
    }
    if (mode == "variation") {
        auto rep = F.variation(true);
        json rows = json::array();
        for (size_t lvl = 0; lvl < rep.per_level.size(); ++lvl) {
            json row;
            row["level"] = lvl;
            put_rat(row, "l1", rep.per_level[lvl]);
            rows.push_back(row);
        }
        report["levels"] = rows;
        put_rat(report, "total", rep.total);
        report["ok"] = rep.total <= 2;
        emit_json(report, out_path, out);
        return rep.total <= 2 ? 0 : 1;
    }
    throw UsageError("unknown sawtooth mode '" + mode + "'");
}

inline int cmd_diffpoint(const std::string& fpath, unsigned depth, const std::string& p_s,
                         const std::string& q_s, const std::string& out_path,
                         std::ostream& out) {
    MonotoneFn f = function_from_json(load_json(fpath));
    DiagonalTrace tr =
        differentiability_point(f, depth, parse_rational(p_s), parse_rational(q_s));
    json report;
    report["command"] = "diffpoint";
    report["Z"] = tr.Z;
    put_rat(report, "v_prefix", tr.v_prefix);
    json rows = json::array();
    for (const auto& st : tr.steps) {
        json row;
        row["n"] = st.n;
        row["bit"] = st.bit;
        put_rat(row, "chosen", st.chosen);
        put_rat(row, "rejected", st.rejected);
        rows.push_back(row);
    }
    report["steps"] = rows;
    emit_json(report, out_path, out);
    return 0;
}

inline int cmd_slope_probe(const std::string& fpath, const std::string& real,
                           unsigned grid_depth, bool middle_third, const std::string& out_path,
                           std::ostream& out) {
    MonotoneFn f = function_from_json(load_json(fpath));
    CauchyName z = builtin_real(real);
    DerivativeProbe probe =
        pseudo_derivative_probe(f, z, default_probe_schedule(), pow2_neg(grid_depth),
                                middle_third);
    std::ostringstream csv;
    csv << "h,sup_slope,inf_slope,n_pairs\n";
    for (const auto& rec : probe.records)
        csv << rat_str(rec.h) << "," << rat_str(rec.sup_slope) << "," << rat_str(rec.inf_slope)
            << "," << rec.n_pairs << "\n";
    emit(csv.str(), out_path, out);
    return 0;
}

inline int cmd_jordan(const std::string& fpath, unsigned grid_depth, const std::string& out_path,
                      std::ostream& out) {
    MonotoneFn f = function_from_json(load_json(fpath));
    std::vector<Rat> grid;
    Int den = pow_int(2, grid_depth);
    for (Int i = 0; i <= den; ++i) grid.push_back(Rat(i, den));
    JordanPair pair = jordan_decompose(f, grid);
    json report;
    report["command"] = "jordan";
    report["grid_depth"] = grid_depth;
    json rows = json::array();
    for (const Rat& q : grid) {
        json row;
        put_rat(row, "q", q);
        put_rat(row, "f0", pair.f0.value(q));
        put_rat(row, "f1", pair.f1.value(q));
        rows.push_back(row);
    }
    report["points"] = rows;
    put_rat(report, "total_variation", pair.f0.value(Rat(1)));
    report["ok"] = true;
    emit_json(report, out_path, out);
    return 0;
}

}  // namespace cli_detail

/// Dispatch one CLI invocation. Returns the process exit code:
/// 0 pass, 1 property violation, 2 usage/schema error, 3 budget exceeded.
inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
    CLI::App app{"exact-rational martingale and differentiability toolkit", "dinidiff"};
    app.require_subcommand(1);

    std::string mpath, fpath, cover_s = "fixture", out_path, real = "third";
    std::string alpha_s = "4", x_s, y_s, z_s, p_s = "1", q_s = "0", sep_s = "1/64";
    std::string saw_mode;
    unsigned depth = 8, precision = 40, digits = 32, trunc = 24, m_level = 2;
    unsigned cycles = 6, max_steps = 512, grid_depth = 12, bc_depth = 5;
    int to_base = 3, exhaustive = 0, jobs = 1;
    bool transforms = false, inner = false, middle_third = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--out", out_path, "also write the report to this path");
        c->add_option("--jobs", jobs, "worker count (outputs are order-independent)");
    };

    auto* fair = app.add_subcommand("fairness", "verify base-k fairness over all strings");
    fair->add_option("--martingale", mpath, "martingale descriptor JSON")->required();
    fair->add_option("--depth", depth, "tree depth");
    fair->add_option("--precision", precision, "bits for approximate evaluators");
    fair->add_flag("--transforms", transforms, "also check normalize/savings outputs");
    add_common(fair);

    auto* sav = app.add_subcommand("savings", "savings transform and its guarantees");
    sav->add_option("--martingale", mpath)->required();
    sav->add_option("--depth", depth);
    add_common(sav);

    auto* rt = app.add_subcommand("roundtrip", "Mart(Fcn(M)) == M node by node");
    rt->add_option("--martingale", mpath)->required();
    rt->add_option("--depth", depth);
    add_common(rt);

    auto* bc = app.add_subcommand("base-convert", "rebase a martingale through its function");
    bc->add_option("--martingale", mpath)->required();
    bc->add_option("--to", to_base, "target base");
    bc->add_option("--trunc", trunc, "truncation depth in the source base");
    bc->add_option("--depth", bc_depth, "fairness verification depth");
    add_common(bc);

    auto* tr = app.add_subcommand("trace", "capital along a real's digit expansion");
    tr->add_option("--martingale", mpath)->required();
    tr->add_option("--real", real, "builtin real or num/den literal");
    tr->add_option("--digits", digits);
    tr->add_option("--separation", sep_s, "scaled dyadic-separation certificate");
    add_common(tr);

    auto* li = app.add_subcommand("linterval", "L-interval outer/inner approximations");
    li->add_option("--alpha", alpha_s)->required();
    li->add_option("--x", x_s);
    li->add_option("--y", y_s);
    li->add_option("--z", z_s, "middle-third point for the inner containment check");
    li->add_option("--exhaustive", exhaustive, "run all dyadic pairs at this depth");
    li->add_flag("--inner", inner);
    add_common(li);

    auto* doob = app.add_subcommand("doob", "two-state interval strategy on the fixture");
    doob->add_option("--cycles", cycles, "betting entries before stopping");
    doob->add_option("--max-steps", max_steps);
    doob->add_option("--z", real, "target real");
    add_common(doob);

    auto* saw = app.add_subcommand("sawtooth", "null-cover compilation and probes");
    saw->add_option("mode", saw_mode, "build | eval | probe | variation")->required();
    saw->add_option("--cover", cover_s, "cover JSON path or 'fixture'");
    saw->add_option("--x", x_s, "evaluation/probe point");
    saw->add_option("--m", m_level, "level");
    add_common(saw);

    auto* dp = app.add_subcommand("diffpoint", "diagonalize toward a differentiability point");
    dp->add_option("--input", fpath, "function descriptor JSON")->required();
    dp->add_option("--depth", depth);
    dp->add_option("--p", p_s, "interval placement scale");
    dp->add_option("--q", q_s, "interval placement shift");
    add_common(dp);

    auto* sp = app.add_subcommand("slope-probe", "sup/inf slopes around a real (CSV)");
    sp->add_option("--function", fpath)->required();
    sp->add_option("--real", real);
    sp->add_option("--grid-depth", grid_depth);
    sp->add_flag("--middle-third", middle_third);
    add_common(sp);

    auto* jd = app.add_subcommand("jordan", "grid Jordan decomposition f = f0 - f1");
    jd->add_option("--function", fpath)->required();
    jd->add_option("--grid-depth", grid_depth);
    add_common(jd);

    std::vector<const char*> argv{"dinidiff"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "usage error: " << e.what() << "\n";
            return 2;
        }
        if (fair->parsed())
            return cli_detail::cmd_fairness(mpath, depth, precision, transforms, out_path, out);
        if (sav->parsed()) return cli_detail::cmd_savings(mpath, depth, out_path, out);
        if (rt->parsed()) return cli_detail::cmd_roundtrip(mpath, depth, out_path, out);
        if (bc->parsed())
            return cli_detail::cmd_base_convert(mpath, to_base, trunc, bc_depth, out_path, out);
        if (tr->parsed()) return cli_detail::cmd_trace(mpath, real, digits, sep_s, out_path, out);
        if (li->parsed())
            return cli_detail::cmd_linterval(alpha_s, x_s, y_s, exhaustive, inner, z_s, out_path,
                                             out);
        if (doob->parsed()) return cli_detail::cmd_doob(cycles, max_steps, real, out_path, out);
        if (saw->parsed())
            return cli_detail::cmd_sawtooth(saw_mode, cover_s, x_s, m_level, out_path, out);
        if (dp->parsed()) return cli_detail::cmd_diffpoint(fpath, depth, p_s, q_s, out_path, out);
        if (sp->parsed())
            return cli_detail::cmd_slope_probe(fpath, real, grid_depth, middle_third, out_path,
                                               out);
        if (jd->parsed()) return cli_detail::cmd_jordan(fpath, grid_depth, out_path, out);
        err << "no command\n";
        return 2;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const PropertyViolation& e) {
        err << "property violation: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dini
