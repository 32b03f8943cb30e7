#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dinidiff/martingale.hpp"

using namespace dini;

TEST_CASE("digit strings") {
    DigitString s = DigitString::parse(2, "0110");
    CHECK(s.str() == "0110");
    CHECK(s.left_endpoint() == Rat(6, 16));
    CHECK(s.child(1).str() == "01101");
    CHECK(s.prefix(2).str() == "01");
    CHECK_THROWS_AS(DigitString::parse(2, "012"), PreconditionViolated);
    DigitString t = DigitString::parse(3, "2101");
    CHECK(t.left_endpoint() == Rat(2 * 27 + 9 + 1, 81));
}

TEST_CASE("builtin martingales are exactly fair") {
    for (int k : {2, 3}) {
        std::vector<Martingale> ms{Martingale::constant(k, Rat(7, 5)),
                                   Martingale::doubler(k, k - 1),
                                   Martingale::predict_constant(k, Rat(1, 3), 0),
                                   Martingale::predict_alternating(k, Rat(1, 2)),
                                   Martingale::predict_repeat(k, Rat(2, 3))};
        for (const auto& M : ms) {
            auto rep = check_fairness(M, 6);
            CHECK(rep.ok());
            CHECK(rep.checked > 0);
        }
    }
}

TEST_CASE("predictor payoffs") {
    Martingale P = Martingale::predict_constant(2, Rat(1, 2), 1);
    CHECK(P.eval(DigitString::parse(2, "1")) == Rat(3, 2));
    CHECK(P.eval(DigitString::parse(2, "0")) == Rat(1, 2));
    CHECK(P.eval(DigitString::parse(2, "11")) == Rat(9, 4));
    CHECK_THROWS_AS(Martingale::predictor(2, Rat(3, 2), [](const std::vector<int>&) { return 0; }),
                    PreconditionViolated);
}

TEST_CASE("doubler concentrates everything on one path") {
    Martingale D = Martingale::doubler(2, 0);
    CHECK(D.eval(DigitString::parse(2, "000")) == Rat(8));
    CHECK(D.eval(DigitString::parse(2, "001")) == Rat(0));
    CHECK(D.eval(DigitString::parse(2, "0010")) == Rat(0));
}

TEST_CASE("from_table validates fairness and extends constantly") {
    std::map<std::vector<int>, Rat> good{{{}, Rat(1)}, {{0}, Rat(3, 2)}, {{1}, Rat(1, 2)}};
    Martingale M = Martingale::from_table(2, 1, good);
    CHECK(M.eval(DigitString::parse(2, "011")) == Rat(3, 2));  // constant below depth 1
    CHECK(M.constant_below());
    CHECK(check_fairness(M, 5).ok());

    std::map<std::vector<int>, Rat> unfair{{{}, Rat(1)}, {{0}, Rat(1)}, {{1}, Rat(1, 2)}};
    CHECK_THROWS_AS(Martingale::from_table(2, 1, unfair), PreconditionViolated);
    std::map<std::vector<int>, Rat> negative{{{}, Rat(1)}, {{0}, Rat(5, 2)}, {{1}, Rat(-1, 2)}};
    CHECK_THROWS_AS(Martingale::from_table(2, 1, negative), PreconditionViolated);
}

TEST_CASE("broken evaluator is flagged by the fairness check") {
    // "bets" without the sibling losing: sum of children != 2 * parent at the root
    Martingale bad(2, [](const DigitString& s, unsigned) { return Rat(Int(1) << s.size()); },
                   true, "broken");
    auto rep = check_fairness(bad, 3);
    CHECK_FALSE(rep.ok());
    CHECK(rep.violations.front().sigma.size() == 0);
}

TEST_CASE("normalized values") {
    Martingale D = Martingale::doubler(2, 0);
    Martingale L = normalize(D);
    CHECK(L.initial() == Rat(2, 3));
    CHECK(L.eval(DigitString::parse(2, "00")) == Rat(5, 3));
    CHECK(L.eval(DigitString::parse(2, "01")) == Rat(1, 3));
    CHECK(check_fairness(L, 6).ok());
    for (int b0 : {0, 1})
        for (int b1 : {0, 1})
            CHECK(L.eval(DigitString(2, {b0, b1})) > 0);
}

TEST_CASE("savings transform: decomposition, fairness, and the drop bound") {
    Martingale P = Martingale::predict_constant(2, Rat(1, 2), 0);
    Martingale L = normalize(P);
    SavingsMartingale S(L);
    Martingale M = S.martingale();
    CHECK(check_fairness(M, 8).ok());
    Rat m0 = M.initial();

    // exhaustive to depth 10: drop bound, linear growth, and checking balance <= 1
    std::vector<std::pair<DigitString, Rat>> level{{DigitString(2, {}), m0}};
    for (unsigned n = 0; n <= 10; ++n) {
        std::vector<std::pair<DigitString, Rat>> next;
        for (auto& [s, pathmax] : level) {
            auto bal = S.balances(s);
            Rat v = bal.total();
            CHECK(v >= pathmax - 2);
            CHECK(v <= Rat(2 * Int(s.size())) + m0);
            CHECK(bal.checking <= 1);
            CHECK(bal.checking > 0);
            CHECK(bal.savings >= 0);
            if (n < 10) {
                Rat mx = std::max(pathmax, v);
                next.push_back({s.child(0), mx});
                next.push_back({s.child(1), mx});
            }
        }
        level = std::move(next);
    }
}

TEST_CASE("savings transform rejects bad inputs") {
    CHECK_THROWS_AS(SavingsMartingale(Martingale::constant(2, Rat(2))), PreconditionViolated);
    CHECK_THROWS_AS(SavingsMartingale(Martingale::constant(3, Rat(1, 2))), BaseMismatch);
    // doubler hits 0, and the transform needs L > 0
    SavingsMartingale Z(normalize(Martingale::doubler(2, 0)));
    CHECK_NOTHROW(Z.balances(DigitString::parse(2, "00")));
}

TEST_CASE("capital trace") {
    Martingale P = Martingale::predict_repeat(2, Rat(1, 2), 0);
    DigitString Z = DigitString::parse(2, "0011");
    auto caps = capital_trace(P, Z, 4);
    CHECK(caps.size() == 5);
    CHECK(caps[0] == Rat(1));
    CHECK(caps[1] == Rat(3, 2));   // predicted repeat of nothing -> first guess 0, hit
    CHECK(caps[2] == Rat(9, 4));   // repeat 0, hit
    CHECK(caps[3] == Rat(9, 8));   // repeat 0, miss
    CHECK(caps[4] == Rat(27, 16));
    CHECK_THROWS_AS(capital_trace(P, Z, 9), PreconditionViolated);
    CHECK_THROWS_AS(capital_trace(Martingale::constant(3, Rat(1)), Z, 2), BaseMismatch);
}

TEST_CASE("constant martingale yields a flat trace") {
    Martingale C = Martingale::constant(2, Rat(5, 7));
    DigitString Z = DigitString::parse(2, "010011");
    for (const Rat& v : capital_trace(C, Z, 6)) CHECK(v == Rat(5, 7));
}
