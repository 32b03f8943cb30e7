#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dinidiff/slopes.hpp"

using namespace dini;

static MonotoneFn vee() {
    return MonotoneFn([](const Rat& q, unsigned) { return rat_abs(q - Rat(1, 2)); }, true, false,
                      0, "vee");
}

TEST_CASE("slope is the exact difference quotient") {
    MonotoneFn sq([](const Rat& q, unsigned) { return Rat(q * q); }, true, true, 0, "square");
    CHECK(slope(sq, Rat(1, 4), Rat(3, 4)) == Rat(1));
    CHECK(slope(sq, Rat(0), Rat(1, 3)) == Rat(1, 3));
    CHECK_THROWS_AS(slope(sq, Rat(1, 2), Rat(1, 2)), PreconditionViolated);
}

TEST_CASE("identity probe is flat at slope one") {
    std::vector<Rat> schedule;
    for (unsigned i = 4; i <= 10; ++i) schedule.push_back(pow2_neg(i));
    auto probe = pseudo_derivative_probe(MonotoneFn::identity(),
                                         CauchyName::of_rational(Rat(1, 3)), schedule,
                                         pow2_neg(10));
    REQUIRE(probe.records.size() == 7);
    for (const auto& rec : probe.records) {
        CHECK(rec.n_pairs > 0);
        CHECK(rec.sup_slope == Rat(1));
        CHECK(rec.inf_slope == Rat(1));
    }
}

TEST_CASE("vee probe at the kink sees both slopes") {
    auto probe = pseudo_derivative_probe(vee(), CauchyName::of_rational(Rat(1, 2)),
                                         {Rat(1, 16), Rat(1, 64)}, pow2_neg(10));
    for (const auto& rec : probe.records) {
        CHECK(rec.sup_slope == Rat(1));
        CHECK(rec.inf_slope == Rat(-1));
    }
    // away from the kink the function is locally linear
    auto flat = pseudo_derivative_probe(vee(), CauchyName::of_rational(Rat(1, 8)),
                                        {Rat(1, 64)}, pow2_neg(10));
    CHECK(flat.records.front().sup_slope == Rat(-1));
    CHECK(flat.records.front().inf_slope == Rat(-1));
}

TEST_CASE("middle-third family straddles the kink") {
    auto rec = middle_third_slopes(vee(), CauchyName::of_rational(Rat(1, 2)), Rat(1, 32),
                                   pow2_neg(10));
    CHECK(rec.n_pairs > 0);
    // any [a,b] whose middle third contains 1/2 mixes both branches:
    // slope magnitude stays <= 1/3 short of a full branch slope
    CHECK(rec.sup_slope <= Rat(1, 3));
    CHECK(rec.inf_slope >= Rat(-1, 3));
    CHECK(rec.n_pairs <= middle_third_slopes(vee(), CauchyName::of_rational(Rat(1, 2)),
                                             Rat(1, 32), pow2_neg(10))
                             .n_pairs);  // deterministic
}

TEST_CASE("sup records are nondecreasing in h over a shared grid") {
    MonotoneFn sq([](const Rat& q, unsigned) { return Rat(q * q); }, true, true, 0, "square");
    auto probe = pseudo_derivative_probe(sq, CauchyName::of_rational(Rat(1, 3)),
                                         {Rat(1, 16), Rat(1, 64), Rat(1, 256)}, pow2_neg(10));
    for (size_t i = 1; i < probe.records.size(); ++i) {
        // schedule is processed largest h first
        CHECK(probe.records[i - 1].h > probe.records[i].h);
        CHECK(probe.records[i - 1].sup_slope >= probe.records[i].sup_slope);
        CHECK(probe.records[i - 1].inf_slope <= probe.records[i].inf_slope);
    }
}

TEST_CASE("jordan decomposition of the vee") {
    std::vector<Rat> grid;
    for (int i = 0; i <= 16; ++i) grid.push_back(Rat(i, 16));
    MonotoneFn f = vee();
    auto [f0, f1] = jordan_decompose(f, grid);
    // total grid variation of |x - 1/2| on [0,1] is exactly 1
    CHECK(f0.value(Rat(1)) == Rat(1));
    CHECK(f0.value(Rat(0)) == Rat(0));
    Rat prev0 = f0.value(grid[0]), prev1 = f1.value(grid[0]);
    for (size_t i = 0; i < grid.size(); ++i) {
        Rat a = f0.value(grid[i]), b = f1.value(grid[i]);
        CHECK(a >= prev0);
        CHECK(b >= prev1);
        CHECK(a - b == f.value(grid[i]));  // exact reconstruction
        prev0 = a;
        prev1 = b;
    }
    CHECK_THROWS_AS(f0.value(Rat(1, 3)), DomainGap);
    CHECK_THROWS_AS(jordan_decompose(f, {Rat(0)}), PreconditionViolated);
    CHECK_THROWS_AS(jordan_decompose(f, {Rat(1), Rat(0)}), PreconditionViolated);
}

TEST_CASE("lipschitz reduction to a monotone function") {
    MonotoneFn f = vee();  // Lipschitz constant 1
    std::vector<Rat> grid;
    for (int i = 0; i <= 32; ++i) grid.push_back(Rat(i, 32));
    MonotoneFn g = lipschitz_to_monotone(f, Rat(1), grid);
    Rat prev = g.value(grid[0]);
    for (size_t i = 1; i < grid.size(); ++i) {
        Rat v = g.value(grid[i]);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(g.value(Rat(3, 4)) == Rat(3, 4) - Rat(1, 4));
    // too small a constant is caught on the grid
    CHECK_THROWS_AS(lipschitz_to_monotone(f, Rat(1, 2), grid), LipschitzViolated);
}
