#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "moflp/errors.hpp"
#include "moflp/metrics.hpp"
#include "moflp/nsga2.hpp"
#include "test_support.hpp"

using namespace moflp;
using moflp::testing::make_solution;
using moflp::testing::make_t1;
using moflp::testing::small_config;

namespace {

/// Points given in min-min convention, mapped onto the domain orientation.
std::vector<ObjectivePoint> from_min_min(const std::vector<std::pair<double, double>>& pts) {
  std::vector<ObjectivePoint> out;
  for (const auto& [a, b] : pts) out.push_back({a, -b});
  return out;
}

/// Naive front peeling by dominance counting; the independent oracle.
std::vector<std::vector<std::size_t>> naive_sort(const std::vector<ObjectivePoint>& pts) {
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<bool> assigned(pts.size(), false);
  std::size_t remaining = pts.size();
  while (remaining > 0) {
    std::vector<std::size_t> front;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      if (assigned[p]) continue;
      bool dominated = false;
      for (std::size_t q = 0; q < pts.size() && !dominated; ++q) {
        if (q != p && !assigned[q] && dominates(pts[q], pts[p])) dominated = true;
      }
      if (!dominated) front.push_back(p);
    }
    for (std::size_t idx : front) assigned[idx] = true;
    remaining -= front.size();
    fronts.push_back(std::move(front));
  }
  return fronts;
}

std::set<std::pair<double, double>> point_set(const ParetoSet& ps) {
  std::set<std::pair<double, double>> out;
  for (const auto& s : ps.solutions) out.insert({*s.cost, *s.reliability});
  return out;
}

bool fronts_match(const ParetoSet& a, const ParetoSet& b, double tol) {
  const auto sa = point_set(a);
  const auto sb = point_set(b);
  if (sa.size() != sb.size()) return false;
  auto ita = sa.begin();
  auto itb = sb.begin();
  for (; ita != sa.end(); ++ita, ++itb) {
    if (std::fabs(ita->first - itb->first) > tol) return false;
    if (std::fabs(ita->second - itb->second) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("fast non-dominated sort matches the worked example") {
  const auto pts = from_min_min({{1, 2}, {2, 1}, {2, 2}, {3, 3}});
  const auto fronts = fast_nondominated_sort(pts);
  REQUIRE(fronts.size() == 3);
  CHECK(fronts[0] == std::vector<std::size_t>{0, 1});
  CHECK(fronts[1] == std::vector<std::size_t>{2});
  CHECK(fronts[2] == std::vector<std::size_t>{3});
}

TEST_CASE("identical points share one front") {
  const auto fronts = fast_nondominated_sort(from_min_min({{1, 1}, {1, 1}, {1, 1}}));
  REQUIRE(fronts.size() == 1);
  CHECK(fronts[0].size() == 3);
}

TEST_CASE("a strictly improving chain yields singleton fronts") {
  const auto fronts = fast_nondominated_sort(from_min_min({{4, 4}, {3, 3}, {2, 2}, {1, 1}}));
  REQUIRE(fronts.size() == 4);
  for (const auto& f : fronts) CHECK(f.size() == 1);
}

TEST_CASE("fast sort agrees with the naive oracle on random point sets") {
  Rng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ObjectivePoint> pts;
    const int count = 1 + static_cast<int>(rng.index(64));
    for (int k = 0; k < count; ++k) {
      // A coarse grid provokes ties and duplicates.
      pts.push_back({std::floor(rng.uniform(0, 6)), std::floor(rng.uniform(0, 6))});
    }
    const auto fast = fast_nondominated_sort(pts);
    const auto naive = naive_sort(pts);
    REQUIRE(fast.size() == naive.size());
    for (std::size_t f = 0; f < fast.size(); ++f) {
      auto a = fast[f];
      auto b = naive[f];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }
  }
}

TEST_CASE("crowding distance on the worked front") {
  const auto crowd = crowding_distance(from_min_min({{1, 3}, {2, 2}, {3, 1}}));
  REQUIRE(crowd.size() == 3);
  CHECK(std::isinf(crowd[0]));
  CHECK(crowd[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isinf(crowd[2]));
}

TEST_CASE("crowding distance edge cases") {
  CHECK(std::isinf(crowding_distance({{1, 1}})[0]));
  const auto two = crowding_distance({{1, 1}, {2, 2}});
  CHECK(std::isinf(two[0]));
  CHECK(std::isinf(two[1]));
}

TEST_CASE("initial populations are feasible and reproducible") {
  const Instance inst = generate_instance(small_config(5, 6, 808));
  MoeaParams params;
  params.population_size = 40;
  params.max_evaluations = 40;
  params.seed = 17;

  const auto pop = init_population(inst, params);
  REQUIRE(pop.size() == 40);
  for (const auto& sol : pop) CHECK(check_feasible(inst, sol).ok());

  const auto pop2 = init_population(inst, params);
  CHECK(pop == pop2);

  const Instance single = generate_instance(small_config(1, 4, 9));
  for (const auto& sol : init_population(single, params)) {
    CHECK(sol.open == std::vector<std::uint8_t>{1});
  }
}

TEST_CASE("crossover respects mask semantics and repairs children") {
  const Instance t1 = make_t1();
  const Solution pa = make_solution({1, 0}, {0, 0});
  const Solution pb = make_solution({0, 1}, {1, 1});

  SUBCASE("all-ones mask swaps everything") {
    const auto [ca, cb] = crossover_masked(t1, pa, pb, {1, 1}, {1, 1});
    CHECK(ca.open == pb.open);
    CHECK(ca.assign == pb.assign);
    CHECK(cb.open == pa.open);
    CHECK(cb.assign == pa.assign);
  }
  SUBCASE("identical parents produce identical children") {
    Rng rng(5);
    const auto [ca, cb] = crossover(t1, pa, pa, rng);
    CHECK(ca == pa);
    CHECK(cb == pa);
  }
  SUBCASE("children are always feasible") {
    Rng rng(6);
    const Instance inst = generate_instance(small_config(6, 7, 4242));
    MoeaParams params;
    params.population_size = 20;
    params.max_evaluations = 20;
    params.seed = 3;
    const auto pop = init_population(inst, params);
    for (int trial = 0; trial < 200; ++trial) {
      const auto& a = pop[rng.index(pop.size())];
      const auto& b = pop[rng.index(pop.size())];
      const auto [ca, cb] = crossover(inst, a, b, rng);
      CHECK(check_feasible(inst, ca).ok());
      CHECK(check_feasible(inst, cb).ok());
    }
  }
}

TEST_CASE("mutation honors the rate and repairs the result") {
  const Instance t1 = make_t1();

  SUBCASE("rate zero is the identity") {
    Rng rng(1);
    const Solution sol = make_solution({1, 0}, {0, 0});
    CHECK(mutate(t1, sol, 0.0, rng) == sol);
  }
  SUBCASE("rate one flips both bits and reassigns to the surviving facility") {
    Rng rng(2);
    const Solution sol = make_solution({1, 0}, {0, 0});
    const Solution out = mutate(t1, sol, 1.0, rng);
    CHECK(out.open == std::vector<std::uint8_t>{0, 1});
    CHECK(out.assign == std::vector<int>{1, 1});
  }
  SUBCASE("mutants stay feasible over many draws") {
    Rng rng(3);
    const Instance inst = generate_instance(small_config(7, 5, 5555));
    MoeaParams params;
    params.population_size = 10;
    params.max_evaluations = 10;
    params.seed = 8;
    const auto pop = init_population(inst, params);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto& base = pop[rng.index(pop.size())];
      const Solution out = mutate(inst, base, rng.uniform(), rng);
      CHECK(check_feasible(inst, out).ok());
    }
  }
}

TEST_CASE("nsga2 matches the exhaustive oracle on the worked instance") {
  const Instance t1 = make_t1();
  MoeaParams params;
  params.population_size = 100;
  params.max_evaluations = 2000;
  params.seed = 29;
  const auto result = nsga2_run(t1, params);
  CHECK(result.evaluations <= 2000);
  CHECK(fronts_match(result.final_front, brute_force_pareto(t1), 1e-9));
}

TEST_CASE("nsga2 converges to the oracle on small random instances") {
  for (int k = 0; k < 6; ++k) {
    Rng rng(derive_seed(99, {static_cast<std::uint64_t>(k)}));
    GenConfig config = small_config(2 + static_cast<int>(rng.index(7)),
                                    2 + static_cast<int>(rng.index(7)), rng.bits());
    const Instance inst = generate_instance(config);
    MoeaParams params;
    params.population_size = 100;
    params.max_evaluations = 2000;
    params.seed = derive_seed(7, {static_cast<std::uint64_t>(k)});
    const auto result = nsga2_run(inst, params);
    CHECK(fronts_match(result.final_front, brute_force_pareto(inst), 1e-9));
  }
}

TEST_CASE("checkpoint fronts improve monotonically and runs are reproducible") {
  // Monotone front hypervolume needs the whole rank-0 front to fit in the
  // population, as it does at the acceptance population size.
  const Instance inst = generate_instance(small_config(6, 6, 321));
  MoeaParams params;
  params.population_size = 100;
  params.max_evaluations = 1000;
  params.checkpoint_budgets = {200, 400, 1000};
  params.seed = 11;

  const auto result = nsga2_run(inst, params);
  REQUIRE(result.checkpoints.size() == 3);

  // Fixed generous reference point for comparable hypervolume.
  const MinPoint ref{1e4, 1.0};
  double last_hv = -1.0;
  for (const auto& [budget, front] : result.checkpoints) {
    std::vector<MinPoint> pts;
    for (const auto& p : front.objective_points()) pts.push_back(to_min_space(p));
    const double hv = hypervolume_2d(pts, ref);
    CHECK(hv >= last_hv - 1e-12);
    last_hv = hv;
  }

  const auto again = nsga2_run(inst, params);
  for (const auto& [budget, front] : result.checkpoints) {
    CHECK(fronts_match(front, again.checkpoints.at(budget), 0.0));
  }
}

TEST_CASE("convergence stopping halts before the evaluation ceiling") {
  const Instance t1 = make_t1();
  MoeaParams params;
  params.population_size = 20;
  params.max_evaluations = 100000;
  params.seed = 5;
  params.stop_on_convergence = true;
  params.convergence_window = 10;
  const auto result = nsga2_run(t1, params);
  CHECK(result.evaluations < params.max_evaluations);
  CHECK(fronts_match(result.final_front, brute_force_pareto(t1), 1e-9));
}

TEST_CASE("parameter validation") {
  MoeaParams params;
  params.population_size = 7;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params.population_size = 100;
  params.max_evaluations = 1000;
  params.checkpoint_budgets = {2000};
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params.checkpoint_budgets = {1000};
  CHECK_NOTHROW(params.validate());
  params.crossover_rate = 1.5;
  CHECK_THROWS_AS(params.validate(), ConfigError);
}

TEST_CASE("random baseline solutions are feasible and evaluated") {
  const Instance inst = generate_instance(small_config(6, 8, 2222));
  const auto sols = random_solutions(inst, 50, 99);
  REQUIRE(sols.size() == 50);
  for (const auto& s : sols) {
    CHECK(check_feasible(inst, s).ok());
    CHECK(s.cost.has_value());
    CHECK(s.reliability.has_value());
  }
  CHECK(random_solutions(inst, 50, 99) == sols);
}
