#include "moflp/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "moflp/errors.hpp"
#include "moflp/metrics.hpp"

namespace moflp {

void MoeaParams::validate() const {
  if (population_size < 4 || population_size % 2 != 0)
    throw ConfigError("population_size must be >= 4 and even");
  if (max_evaluations < population_size)
    throw ConfigError("max_evaluations must cover at least the initial population");
  if (crossover_rate < 0.0 || crossover_rate > 1.0)
    throw ConfigError("crossover_rate must lie in [0,1]");
  if (mutation_rate && (*mutation_rate < 0.0 || *mutation_rate > 1.0))
    throw ConfigError("mutation_rate must lie in [0,1]");
  for (long b : checkpoint_budgets) {
    if (b > max_evaluations)
      throw ConfigError("checkpoint budget " + std::to_string(b) +
                        " exceeds max_evaluations");
  }
  if (convergence_window < 1) throw ConfigError("convergence_window must be >= 1");
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    const std::vector<ObjectivePoint>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;

  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) {
        dominated[p].push_back(q);
      } else if (dominates(points[q], points[p])) {
        ++domination_count[p];
      }
    }
    if (domination_count[p] == 0) current.push_back(p);
  }

  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<ObjectivePoint>& front) {
  const std::size_t n = front.size();
  if (n == 0) throw DomainError("crowding_distance requires a non-empty front");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) return std::vector<double>(n, kInf);

  auto accumulate_objective = [&](auto key) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return key(front[a]) < key(front[b]);
    });
    dist[order.front()] = kInf;
    dist[order.back()] = kInf;
    const double range = key(front[order.back()]) - key(front[order.front()]);
    if (range <= 0.0) return;  // zero range contributes nothing
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const std::size_t idx = order[k];
      if (dist[idx] == kInf) continue;
      dist[idx] += (key(front[order[k + 1]]) - key(front[order[k - 1]])) / range;
    }
  };

  accumulate_objective([](const ObjectivePoint& p) { return p.f1; });
  accumulate_objective([](const ObjectivePoint& p) { return p.f2; });
  return dist;
}

namespace {

Solution random_feasible(const Instance& inst, Rng& rng) {
  Solution sol;
  sol.open.resize(inst.m);
  // Uniform over non-empty subsets via rejection.
  for (;;) {
    bool any = false;
    for (int i = 0; i < inst.m; ++i) {
      sol.open[i] = rng.bernoulli(0.5) ? 1 : 0;
      any = any || sol.open[i];
    }
    if (any) break;
  }
  std::vector<int> open_indices;
  for (int i = 0; i < inst.m; ++i)
    if (sol.open[i]) open_indices.push_back(i);
  sol.assign.resize(inst.n);
  for (int j = 0; j < inst.n; ++j) {
    sol.assign[j] = open_indices[rng.index(open_indices.size())];
  }
  return sol;
}

void repair(const Instance& inst, Solution& sol) {
  bool any = false;
  for (auto b : sol.open) any = any || (b != 0);
  if (!any) {
    int cheapest = 0;
    for (int i = 1; i < inst.m; ++i)
      if (inst.fixed_cost[i] < inst.fixed_cost[cheapest]) cheapest = i;
    sol.open[cheapest] = 1;
  }
  for (int j = 0; j < inst.n; ++j) {
    if (!sol.open[sol.assign[j]]) {
      sol.assign[j] = best_facility_for(inst, sol.open, j);
    }
  }
  sol.cost.reset();
  sol.reliability.reset();
}

/// Dedup identical objective points (keep first occurrence) so fronts stored
/// as ParetoSets carry one representative per point.
ParetoSet snapshot_front(const Instance& inst, const std::vector<Solution>& pop,
                         const std::vector<std::size_t>& front_indices) {
  ParetoSet ps;
  ps.instance_id = inst.id;
  for (std::size_t idx : front_indices) {
    const auto p = objective_point(pop[idx]);
    bool duplicate = false;
    for (const auto& kept : ps.solutions) {
      if (objective_point(kept) == p) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) ps.solutions.push_back(pop[idx]);
  }
  return ps;
}

}  // namespace

std::vector<Solution> init_population(const Instance& inst, const MoeaParams& params) {
  params.validate();
  Rng rng(derive_seed(params.seed, {0}));
  std::vector<Solution> pop;
  pop.reserve(params.population_size);
  for (int k = 0; k < params.population_size; ++k) pop.push_back(random_feasible(inst, rng));
  return pop;
}

std::pair<Solution, Solution> crossover_masked(const Instance& inst, const Solution& parent_a,
                                               const Solution& parent_b,
                                               const std::vector<std::uint8_t>& open_mask,
                                               const std::vector<std::uint8_t>& assign_mask) {
  if (open_mask.size() != static_cast<std::size_t>(inst.m) ||
      assign_mask.size() != static_cast<std::size_t>(inst.n)) {
    throw ShapeError("crossover mask lengths do not match the instance");
  }
  Solution a = parent_a;
  Solution b = parent_b;
  for (int i = 0; i < inst.m; ++i) {
    if (open_mask[i]) std::swap(a.open[i], b.open[i]);
  }
  for (int j = 0; j < inst.n; ++j) {
    if (assign_mask[j]) std::swap(a.assign[j], b.assign[j]);
  }
  repair(inst, a);
  repair(inst, b);
  return {std::move(a), std::move(b)};
}

std::pair<Solution, Solution> crossover(const Instance& inst, const Solution& parent_a,
                                        const Solution& parent_b, Rng& rng) {
  std::vector<std::uint8_t> open_mask(inst.m);
  std::vector<std::uint8_t> assign_mask(inst.n);
  for (int i = 0; i < inst.m; ++i) open_mask[i] = rng.bernoulli(0.5) ? 1 : 0;
  for (int j = 0; j < inst.n; ++j) assign_mask[j] = rng.bernoulli(0.5) ? 1 : 0;
  return crossover_masked(inst, parent_a, parent_b, open_mask, assign_mask);
}

Solution mutate(const Instance& inst, const Solution& sol, double rate, Rng& rng) {
  Solution out = sol;
  for (int i = 0; i < inst.m; ++i) {
    if (rng.uniform() < rate) out.open[i] ^= 1;
  }
  for (int j = 0; j < inst.n; ++j) {
    if (rng.uniform() < rate) out.assign[j] = static_cast<int>(rng.index(inst.m));
  }
  repair(inst, out);
  return out;
}

namespace {

/// Evaluation memo keyed by genome. Only cache misses invoke the objective
/// functions, so the evaluation budget is spent on distinct solutions.
class EvalCache {
 public:
  explicit EvalCache(const Instance& inst) : inst_(inst) {}

  bool known(const Solution& s) const {
    return cache_.find(std::pair{s.open, s.assign}) != cache_.end();
  }

  void eval(Solution& s) {
    const auto key = std::pair{s.open, s.assign};
    const auto it = cache_.find(key);
    if (it != cache_.end()) {
      s.cost = it->second.f1;
      s.reliability = it->second.f2;
      return;
    }
    evaluate(inst_, s);
    cache_.emplace(key, ObjectivePoint{*s.cost, *s.reliability});
    ++paid_;
  }

  long paid() const { return paid_; }

 private:
  const Instance& inst_;
  std::map<std::pair<std::vector<std::uint8_t>, std::vector<int>>, ObjectivePoint> cache_;
  long paid_ = 0;
};

}  // namespace

Nsga2Result nsga2_run(const Instance& inst, const MoeaParams& params) {
  params.validate();
  const double mutation_rate = params.mutation_rate
                                   ? *params.mutation_rate
                                   : 0.15 / static_cast<double>(inst.m + inst.n);
  const int pop_size = params.population_size;
  // Generations that pay no evaluations are cheap; this guard only ends runs
  // whose reachable neighborhood is effectively exhausted.
  constexpr int kStagnantLimit = 200;
  constexpr int kNoveltyAttempts = 4;

  Nsga2Result result;
  EvalCache cache(inst);
  std::vector<Solution> pop = init_population(inst, params);
  for (auto& s : pop) cache.eval(s);
  result.evaluations = cache.paid();

  Rng rng(derive_seed(params.seed, {1}));

  auto rank_population = [&](std::vector<Solution>& individuals) -> RankedPopulation {
    RankedPopulation ranked;
    std::vector<ObjectivePoint> pts;
    pts.reserve(individuals.size());
    for (const auto& s : individuals) pts.push_back(objective_point(s));
    const auto fronts = fast_nondominated_sort(pts);
    ranked.individuals = std::move(individuals);
    ranked.rank.assign(ranked.individuals.size(), 0);
    ranked.crowding.assign(ranked.individuals.size(), 0.0);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      std::vector<ObjectivePoint> front_pts;
      front_pts.reserve(fronts[f].size());
      for (auto idx : fronts[f]) front_pts.push_back(pts[idx]);
      const auto crowd = crowding_distance(front_pts);
      for (std::size_t k = 0; k < fronts[f].size(); ++k) {
        ranked.rank[fronts[f][k]] = static_cast<int>(f);
        ranked.crowding[fronts[f][k]] = crowd[k];
      }
    }
    return ranked;
  };

  RankedPopulation ranked = rank_population(pop);

  auto current_front_indices = [&]() {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < ranked.individuals.size(); ++k)
      if (ranked.rank[k] == 0) idx.push_back(k);
    return idx;
  };

  // Fixed reference point for the convergence rule: generous bounds that no
  // feasible solution exceeds, so front hypervolume is comparable across
  // generations.
  double cost_bound = 0.0;
  for (double f : inst.fixed_cost) cost_bound += f;
  for (int j = 0; j < inst.n; ++j) {
    double worst = 0.0;
    for (int i = 0; i < inst.m; ++i)
      worst = std::max(worst, inst.demand[j] * inst.d(i, j) * inst.c(i, j));
    cost_bound += worst;
  }
  const MinPoint convergence_ref{cost_bound * 1.01 + 1.0, 1.0};

  auto front_hypervolume = [&]() {
    std::vector<MinPoint> pts;
    for (std::size_t k : current_front_indices())
      pts.push_back(to_min_space(objective_point(ranked.individuals[k])));
    return hypervolume_2d(std::move(pts), convergence_ref);
  };

  auto record_checkpoints = [&]() {
    for (long budget : params.checkpoint_budgets) {
      if (result.evaluations >= budget && !result.checkpoints.count(budget)) {
        result.checkpoints.emplace(
            budget, snapshot_front(inst, ranked.individuals, current_front_indices()));
      }
    }
  };
  record_checkpoints();

  auto tournament = [&]() -> const Solution& {
    const std::size_t a = rng.index(ranked.individuals.size());
    const std::size_t b = rng.index(ranked.individuals.size());
    if (ranked.rank[a] != ranked.rank[b])
      return ranked.individuals[ranked.rank[a] < ranked.rank[b] ? a : b];
    if (ranked.crowding[a] != ranked.crowding[b])
      return ranked.individuals[ranked.crowding[a] > ranked.crowding[b] ? a : b];
    return ranked.individuals[a];
  };

  double last_hv = front_hypervolume();
  int stall_generations = 0;
  int stagnant_generations = 0;

  while (result.evaluations < params.max_evaluations &&
         stagnant_generations < kStagnantLimit) {
    // Variation: tournament pairs -> uniform crossover -> mutation. Candidates
    // whose genome is already evaluated are regenerated a few times so the
    // budget concentrates on novel solutions; a still-duplicate candidate is
    // kept and served from the cache for free.
    const long paid_before = cache.paid();
    std::vector<Solution> offspring;
    offspring.reserve(pop_size);
    while (static_cast<int>(offspring.size()) < pop_size &&
           cache.paid() < params.max_evaluations) {
      Solution accepted;
      for (int attempt = 0; attempt < kNoveltyAttempts; ++attempt) {
        const Solution& pa = tournament();
        const Solution& pb = tournament();
        Solution ca;
        Solution cb;
        if (rng.uniform() < params.crossover_rate) {
          std::tie(ca, cb) = crossover(inst, pa, pb, rng);
        } else {
          ca = pa;
          cb = pb;
        }
        ca = mutate(inst, ca, mutation_rate, rng);
        if (!cache.known(ca)) {
          accepted = std::move(ca);
          break;
        }
        cb = mutate(inst, cb, mutation_rate, rng);
        if (!cache.known(cb)) {
          accepted = std::move(cb);
          break;
        }
        accepted = std::move(ca);
      }
      cache.eval(accepted);
      offspring.push_back(std::move(accepted));
    }
    result.evaluations = cache.paid();
    stagnant_generations = cache.paid() == paid_before ? stagnant_generations + 1 : 0;
    ++result.generations;

    // Elitist environmental selection over parents + offspring. Within the
    // crowding order, genomes already kept this round are deferred so the
    // population stays diverse; they fill leftover slots only.
    std::vector<Solution> merged = std::move(ranked.individuals);
    merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                  std::make_move_iterator(offspring.end()));
    std::vector<ObjectivePoint> merged_pts;
    merged_pts.reserve(merged.size());
    for (const auto& s : merged) merged_pts.push_back(objective_point(s));
    const auto fronts = fast_nondominated_sort(merged_pts);

    std::vector<Solution> next;
    next.reserve(pop_size);
    std::set<std::pair<std::vector<std::uint8_t>, std::vector<int>>> kept;
    std::vector<std::size_t> deferred;
    for (const auto& front : fronts) {
      if (static_cast<int>(next.size()) >= pop_size) break;
      std::vector<ObjectivePoint> front_pts;
      front_pts.reserve(front.size());
      for (auto idx : front) front_pts.push_back(merged_pts[idx]);
      const auto crowd = crowding_distance(front_pts);
      std::vector<std::size_t> order(front.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
      for (std::size_t k : order) {
        if (static_cast<int>(next.size()) >= pop_size) break;
        const Solution& cand = merged[front[k]];
        if (kept.insert({cand.open, cand.assign}).second) {
          next.push_back(cand);
        } else {
          deferred.push_back(front[k]);
        }
      }
    }
    for (std::size_t idx : deferred) {
      if (static_cast<int>(next.size()) >= pop_size) break;
      next.push_back(merged[idx]);
    }
    ranked = rank_population(next);
    record_checkpoints();

    if (params.stop_on_convergence) {
      const double hv = front_hypervolume();
      const double rel_gain = hv - last_hv <= 0.0
                                  ? 0.0
                                  : (hv - last_hv) / std::max(std::fabs(last_hv), 1e-300);
      stall_generations = rel_gain < params.convergence_tol ? stall_generations + 1 : 0;
      last_hv = hv;
      if (stall_generations >= params.convergence_window) break;
    }
  }

  result.final_front = snapshot_front(inst, ranked.individuals, current_front_indices());
  // Budgets the loop never reached (early convergence stop) get the final front.
  for (long budget : params.checkpoint_budgets) {
    if (!result.checkpoints.count(budget)) result.checkpoints.emplace(budget, result.final_front);
  }
  return result;
}

std::vector<Solution> random_solutions(const Instance& inst, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Solution> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Solution s = random_feasible(inst, rng);
    evaluate(inst, s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace moflp
