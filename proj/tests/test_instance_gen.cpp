#include <doctest.h>

#include <set>

#include "moflp/errors.hpp"
#include "moflp/instance_gen.hpp"
#include "moflp/rng.hpp"
#include "test_support.hpp"

using namespace moflp;
using moflp::testing::make_t1;
using moflp::testing::small_config;

TEST_CASE("generation is deterministic per (config, seed)") {
  const GenConfig config = small_config(6, 9, 42);
  const Instance a = generate_instance(config);
  const Instance b = generate_instance(config);
  CHECK(encode_instance(a) == encode_instance(b));

  GenConfig other = config;
  other.seed = 43;
  CHECK(encode_instance(a) != encode_instance(generate_instance(other)));
}

TEST_CASE("generated instances have the configured shape") {
  const Instance inst = generate_instance(small_config(20, 50, 7));
  CHECK(inst.m == 20);
  CHECK(inst.n == 50);
  CHECK(inst.distance.size() == 20u * 50u);
  CHECK(inst.unit_cost.size() == 20u * 50u);
  CHECK(inst.reliability.size() == 20u * 50u);
}

TEST_CASE("degenerate ranges pin the drawn values") {
  GenConfig config = small_config(4, 3, 11);
  config.fixed_cost = {5.0, 5.0};
  const Instance inst = generate_instance(config);
  for (double f : inst.fixed_cost) CHECK(f == 5.0);
}

TEST_CASE("generated instances satisfy all structural invariants") {
  Rng rng(314);
  for (int trial = 0; trial < 25; ++trial) {
    GenConfig config = small_config(1 + static_cast<int>(rng.index(8)),
                                    1 + static_cast<int>(rng.index(8)), rng.bits());
    const Instance inst = generate_instance(config);
    CHECK_NOTHROW(inst.validate());
    for (const auto& p : inst.coords_facility) {
      CHECK(p[0] >= 0.0);
      CHECK(p[0] < 1.0);
      CHECK(p[1] >= 0.0);
      CHECK(p[1] < 1.0);
    }
  }
}

TEST_CASE("invalid generator configs are rejected") {
  GenConfig config = small_config(3, 3, 0);
  config.demand = {0.0, 5.0};
  CHECK_THROWS_AS(generate_instance(config), ConfigError);
  config = small_config(3, 3, 0);
  config.unit_cost = {2.0, 1.0};
  CHECK_THROWS_AS(generate_instance(config), ConfigError);
}

TEST_CASE("brute-force oracle reproduces the worked front") {
  const Instance t1 = make_t1();
  const ParetoSet front = brute_force_pareto(t1);
  REQUIRE(front.solutions.size() == 3);
  front.validate();

  const auto pts = front.objective_points();
  CHECK(pts[0].f1 == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(pts[0].f2 == doctest::Approx(1.9 / 3.0).epsilon(1e-12));
  CHECK(pts[1].f1 == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(pts[1].f2 == doctest::Approx(2.2 / 3.0).epsilon(1e-12));
  CHECK(pts[2].f1 == doctest::Approx(33.0).epsilon(1e-12));
  CHECK(pts[2].f2 == doctest::Approx(4.1 / 3.0).epsilon(1e-12));

  CHECK(front.solutions[2].assign == std::vector<int>{0, 1});
}

TEST_CASE("single-facility instances have a one-point front") {
  const Instance inst = generate_instance(small_config(1, 5, 3));
  const ParetoSet front = brute_force_pareto(inst);
  REQUIRE(front.solutions.size() == 1);
  CHECK(front.solutions[0].open == std::vector<std::uint8_t>{1});
  CHECK(front.solutions[0].assign == std::vector<int>(5, 0));
}

TEST_CASE("a facility dominated in every respect never opens alone") {
  // Same coordinates, but facility 1 is worse in fixed cost, unit cost and
  // reliability, so opening only facility 1 is dominated by only facility 0.
  Instance inst;
  inst.id = "dominated";
  inst.m = 2;
  inst.n = 2;
  inst.fixed_cost = {10.0, 20.0};
  inst.demand = {1.0, 2.0};
  inst.timescale = {1.0, 1.0};
  inst.coords_facility = {{{0.5, 0.5}}, {{0.5, 0.5}}};
  inst.coords_customer = {{{0.1, 0.5}}, {{0.9, 0.5}}};
  inst.distance = {0.4, 0.4, 0.4, 0.4};
  inst.unit_cost = {0.5, 0.5, 1.5, 1.5};
  inst.reliability = {0.9, 0.9, 0.2, 0.2};
  inst.validate();

  const ParetoSet front = brute_force_pareto(inst);
  for (const auto& sol : front.solutions) {
    const bool only_dominated = sol.open[1] == 1 && sol.open[0] == 0;
    CHECK_FALSE(only_dominated);
  }
}

TEST_CASE("oracle front is complete and mutually non-dominated") {
  const Instance inst = generate_instance(small_config(6, 5, 77));
  const ParetoSet front = brute_force_pareto(inst);
  front.validate();
  const auto front_pts = front.objective_points();

  // Re-scan every enumerated candidate: none may dominate a front member.
  for (std::uint32_t mask = 1; mask < (1u << inst.m); ++mask) {
    Solution sol;
    sol.open.resize(inst.m);
    for (int i = 0; i < inst.m; ++i) sol.open[i] = (mask >> i) & 1u;
    sol.assign = optimal_assignment(inst, sol.open);
    evaluate(inst, sol);
    const auto p = objective_point(sol);
    for (const auto& fp : front_pts) CHECK_FALSE(dominates(p, fp));
  }
}

TEST_CASE("oracle rejects oversized instances") {
  Instance inst = generate_instance(small_config(13, 2, 5));
  CHECK_THROWS_AS(brute_force_pareto(inst), DomainError);
}

TEST_CASE("instance serialization round-trips exactly") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    GenConfig config = small_config(1 + static_cast<int>(rng.index(6)),
                                    1 + static_cast<int>(rng.index(6)), rng.bits());
    const Instance inst = generate_instance(config);
    const Instance back = decode_instance(encode_instance(inst));
    CHECK(back.id == inst.id);
    CHECK(back.m == inst.m);
    CHECK(back.n == inst.n);
    CHECK(back.fixed_cost == inst.fixed_cost);
    CHECK(back.demand == inst.demand);
    CHECK(back.timescale == inst.timescale);
    CHECK(back.distance == inst.distance);
    CHECK(back.unit_cost == inst.unit_cost);
    CHECK(back.reliability == inst.reliability);
    CHECK(back.coords_facility == inst.coords_facility);
    CHECK(back.coords_customer == inst.coords_customer);
  }
}

TEST_CASE("decoding reports missing and invalid fields") {
  const std::string doc = encode_instance(make_t1());

  SUBCASE("missing demand array") {
    auto broken = doc;
    const auto pos = broken.find("\"q\"");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 3, "\"qq\"");
    CHECK_THROWS_WITH_AS(decode_instance(broken), doctest::Contains("demand"), ParseError);
  }
  SUBCASE("reliability out of range") {
    auto inst = make_t1();
    inst.reliability[0] = 1.5;
    // encode_instance does not validate; decoding must.
    CHECK_THROWS_AS(decode_instance(encode_instance(inst)), ValidationError);
  }
  SUBCASE("not JSON at all") {
    CHECK_THROWS_AS(decode_instance("m: 2\nn: 2\n"), ParseError);
  }
}

TEST_CASE("pareto set files round-trip") {
  const Instance t1 = make_t1();
  const ParetoSet front = brute_force_pareto(t1);
  const ParetoSet back = decode_pareto(encode_pareto(front));
  CHECK(back.instance_id == front.instance_id);
  REQUIRE(back.solutions.size() == front.solutions.size());
  for (std::size_t k = 0; k < back.solutions.size(); ++k) {
    CHECK(back.solutions[k].open == front.solutions[k].open);
    CHECK(back.solutions[k].assign == front.solutions[k].assign);
    CHECK(*back.solutions[k].cost == *front.solutions[k].cost);
    CHECK(*back.solutions[k].reliability == *front.solutions[k].reliability);
  }
}
