#include <doctest.h>

#include <cmath>

#include "moflp/errors.hpp"
#include "moflp/flp.hpp"
#include "moflp/rng.hpp"
#include "test_support.hpp"

using namespace moflp;
using moflp::testing::make_solution;
using moflp::testing::make_t1;

TEST_CASE("eval_total_cost on the worked instance") {
  const Instance t1 = make_t1();

  Solution only_first = make_solution({1, 0}, {0, 0});
  CHECK(eval_total_cost(t1, only_first) == doctest::Approx(15.0).epsilon(1e-12));

  Solution both = make_solution({1, 1}, {0, 1});
  CHECK(eval_total_cost(t1, both) == doctest::Approx(33.0).epsilon(1e-12));
}

TEST_CASE("eval_total_cost with zero demand degenerates to the fixed costs") {
  Instance inst = make_t1();
  inst.demand = {0.0, 0.0};  // deliberately bypasses validate()
  Solution all_open = make_solution({1, 1}, {0, 1});
  CHECK(eval_total_cost(inst, all_open) == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("eval_reliability is gated by open bits only") {
  const Instance t1 = make_t1();

  Solution only_first = make_solution({1, 0}, {0, 0});
  CHECK(eval_reliability(t1, only_first) == doctest::Approx(1.9 / 3.0).epsilon(1e-12));

  Solution both = make_solution({1, 1}, {0, 1});
  // Both facilities contribute for every customer; the value exceeds 1.
  CHECK(eval_reliability(t1, both) == doctest::Approx(4.1 / 3.0).epsilon(1e-12));

  // Invariant to the assignment for fixed open bits.
  Solution both_other = make_solution({1, 1}, {1, 0});
  CHECK(eval_reliability(t1, both) == eval_reliability(t1, both_other));

  Instance zero_r = make_t1();
  zero_r.reliability = {0.0, 0.0, 0.0, 0.0};
  CHECK(eval_reliability(zero_r, only_first) == 0.0);
}

TEST_CASE("assignment-gated reliability restricts to serving facilities") {
  const Instance t1 = make_t1();
  Solution both = make_solution({1, 1}, {0, 1});
  const double expected = (1.0 * 0.9 + 2.0 * 0.8) / 3.0;
  CHECK(eval_reliability(t1, both, ReliabilityGate::assignment) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluation is pure") {
  const Instance t1 = make_t1();
  Solution sol = make_solution({1, 0}, {0, 0});
  const double c1 = eval_total_cost(t1, sol);
  const double c2 = eval_total_cost(t1, sol);
  const double r1 = eval_reliability(t1, sol);
  const double r2 = eval_reliability(t1, sol);
  CHECK(c1 == c2);
  CHECK(r1 == r2);
}

TEST_CASE("eval rejects infeasible solutions with a named constraint") {
  const Instance t1 = make_t1();
  Solution bad = make_solution({1, 0}, {0, 1});
  CHECK_THROWS_AS(eval_total_cost(t1, bad), FeasibilityError);
  CHECK_THROWS_WITH_AS(eval_reliability(t1, bad),
                       doctest::Contains("closed facility"), FeasibilityError);
}

TEST_CASE("pair_reliability matches the normal model") {
  const VelocityModel vel{1.0, 0.3};

  SUBCASE("required speed at the mean gives one half") {
    const auto r = pair_reliability({1.0}, 1, 1, {1.0}, vel);
    CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("zero distance with mean three deviations above zero") {
    const VelocityModel v3{3.0, 1.0};
    const auto r = pair_reliability({0.0}, 1, 1, {1.0}, v3);
    CHECK(r[0] == doctest::Approx(0.99865).epsilon(1e-4));
  }
  SUBCASE("required speed one deviation above the mean") {
    const auto r = pair_reliability({1.3}, 1, 1, {1.0}, vel);
    CHECK(r[0] == doctest::Approx(0.15866).epsilon(1e-4));
  }
  SUBCASE("non-positive timescale is rejected") {
    CHECK_THROWS_AS(pair_reliability({1.0}, 1, 1, {0.0}, vel), DomainError);
  }
  SUBCASE("monotone in distance and timescale") {
    const auto r = pair_reliability({0.5, 1.0, 1.5}, 3, 1, {1.0}, vel);
    CHECK(r[0] > r[1]);
    CHECK(r[1] > r[2]);
    const auto rt = pair_reliability({1.0, 1.0}, 1, 2, {0.5, 1.0}, vel);
    CHECK(rt[0] < rt[1]);
  }
  SUBCASE("all entries stay in the unit interval") {
    const auto r = pair_reliability({0.0, 100.0, 3.7}, 3, 1, {0.01}, vel);
    for (double v : r) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("check_feasible reports every violation") {
  const Instance t1 = make_t1();

  CHECK(check_feasible(t1, make_solution({1, 0}, {0, 0})).ok());

  const auto report = check_feasible(t1, make_solution({1, 0}, {0, 1}));
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].index == 1);

  const auto closed = check_feasible(t1, make_solution({0, 0}, {0, 1}));
  CHECK(closed.violations.size() == 3);  // no facility open + both customers orphaned

  CHECK_THROWS_AS(check_feasible(t1, make_solution({1}, {0, 0})), ShapeError);
  CHECK_THROWS_AS(check_feasible(t1, make_solution({1, 0}, {0, 7})), ShapeError);
}

TEST_CASE("dominance is strict in at least one objective") {
  CHECK(dominates({10.0, 0.9}, {12.0, 0.8}));
  CHECK_FALSE(dominates({10.0, 0.9}, {10.0, 0.9}));
  CHECK_FALSE(dominates({10.0, 0.7}, {12.0, 0.8}));
  CHECK_FALSE(dominates({12.0, 0.8}, {10.0, 0.7}));
}

TEST_CASE("dominance is a strict partial order on random triples") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const ObjectivePoint a{rng.uniform(0, 4), rng.uniform(0, 4)};
    const ObjectivePoint b{rng.uniform(0, 4), rng.uniform(0, 4)};
    const ObjectivePoint c{rng.uniform(0, 4), rng.uniform(0, 4)};
    CHECK_FALSE(dominates(a, a));
    if (dominates(a, b)) CHECK_FALSE(dominates(b, a));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("optimal_assignment picks the cheapest open facility") {
  const Instance t1 = make_t1();
  CHECK(optimal_assignment(t1, {1, 1}) == std::vector<int>{0, 1});
  CHECK(optimal_assignment(t1, {1, 0}) == std::vector<int>{0, 0});
  CHECK_THROWS_AS(optimal_assignment(t1, {0, 0}), DomainError);
}

TEST_CASE("optimal_assignment breaks ties toward the lowest index") {
  // Facilities 0 and 2 sit symmetrically around the only customer.
  Instance inst;
  inst.id = "tie";
  inst.m = 3;
  inst.n = 1;
  inst.fixed_cost = {1.0, 1.0, 1.0};
  inst.demand = {1.0};
  inst.timescale = {1.0};
  inst.coords_facility = {{{0.0, 0.0}}, {{1.0, 5.0}}, {{2.0, 0.0}}};
  inst.coords_customer = {{{1.0, 0.0}}};
  inst.distance = {1.0, 5.0, 1.0};
  inst.unit_cost = {1.0, 1.0, 1.0};
  inst.reliability = {0.5, 0.5, 0.5};
  inst.validate();

  CHECK(optimal_assignment(inst, {1, 1, 1}) == std::vector<int>{0});
}

TEST_CASE("optimal assignment never costs more than a random feasible one") {
  Rng rng(99);
  const GenConfig config = moflp::testing::small_config(5, 7, 1234);
  const Instance inst = generate_instance(config);
  for (int trial = 0; trial < 200; ++trial) {
    Solution random_sol;
    random_sol.open.assign(inst.m, 0);
    bool any = false;
    for (int i = 0; i < inst.m; ++i) {
      random_sol.open[i] = rng.bernoulli(0.5) ? 1 : 0;
      any = any || random_sol.open[i];
    }
    if (!any) random_sol.open[rng.index(inst.m)] = 1;
    std::vector<int> open_list;
    for (int i = 0; i < inst.m; ++i)
      if (random_sol.open[i]) open_list.push_back(i);
    random_sol.assign.resize(inst.n);
    for (int j = 0; j < inst.n; ++j)
      random_sol.assign[j] = open_list[rng.index(open_list.size())];

    Solution best = random_sol;
    best.assign = optimal_assignment(inst, random_sol.open);
    CHECK(eval_total_cost(inst, best) <= eval_total_cost(inst, random_sol) + 1e-12);
  }
}

TEST_CASE("instance validation catches broken invariants") {
  Instance inst = make_t1();
  inst.reliability[2] = 1.5;
  CHECK_THROWS_AS(inst.validate(), ValidationError);

  Instance inconsistent = make_t1();
  inconsistent.distance[0] = 1.1;  // no longer matches the coordinates
  CHECK_THROWS_AS(inconsistent.validate(), ValidationError);

  Instance negative = make_t1();
  negative.fixed_cost[0] = -2.0;
  CHECK_THROWS_AS(negative.validate(), ValidationError);
}
