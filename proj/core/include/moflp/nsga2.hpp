#ifndef MOFLP_NSGA2_HPP
#define MOFLP_NSGA2_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "moflp/instance_gen.hpp"
#include "moflp/rng.hpp"

namespace moflp {

/// NSGA-II run parameters. `mutation_rate` left unset resolves to
/// 0.15/(m+n) on the target instance; together with the low crossover rate
/// this favors single-gene moves, which measure best for exact front
/// recovery under tight evaluation budgets (objective evaluations are
/// memoized by genome, so duplicate candidates never spend budget). With
/// `stop_on_convergence` set, the run ends once the rank-0 front's
/// hypervolume improves by less than `convergence_tol` (relative) over
/// `convergence_window` consecutive generations.
struct MoeaParams {
  int population_size = 100;
  long max_evaluations = 10000;
  double crossover_rate = 0.1;
  std::optional<double> mutation_rate;
  std::uint64_t seed = 0;
  std::vector<long> checkpoint_budgets;
  bool stop_on_convergence = false;
  double convergence_tol = 1e-6;
  int convergence_window = 50;

  void validate() const;
};

/// Population annotated with front index and crowding distance.
struct RankedPopulation {
  std::vector<Solution> individuals;
  std::vector<int> rank;
  std::vector<double> crowding;
};

/// Deb's fast non-dominated sort. Front 0 is the maximal non-dominated
/// subset; each later front is maximal after removing earlier ones.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    const std::vector<ObjectivePoint>& points);

/// Crowding distances for one front: boundary points per objective get
/// +infinity, interior points the sum over objectives of neighbor gap divided
/// by objective range (zero-range objectives contribute zero).
std::vector<double> crowding_distance(const std::vector<ObjectivePoint>& front);

/// population_size feasible individuals: uniformly random non-empty open set,
/// each customer assigned uniformly among open facilities. Deterministic per
/// params.seed.
std::vector<Solution> init_population(const Instance& inst, const MoeaParams& params);

/// Uniform crossover on open bits and assignment entries (applied gene-wise
/// with an independent fair coin), followed by feasibility repair.
std::pair<Solution, Solution> crossover(const Instance& inst, const Solution& parent_a,
                                        const Solution& parent_b, Rng& rng);

/// Deterministic core of `crossover`: genes where the mask is set are swapped
/// between the children, then both are repaired.
std::pair<Solution, Solution> crossover_masked(const Instance& inst, const Solution& parent_a,
                                               const Solution& parent_b,
                                               const std::vector<std::uint8_t>& open_mask,
                                               const std::vector<std::uint8_t>& assign_mask);

/// Flips each open bit with probability `rate`; resamples each assignment
/// uniformly over all facilities with probability `rate`. Repair then
/// (a) re-opens the cheapest-fixed-cost facility if none is open and
/// (b) reassigns customers pointing at closed facilities to their cost-optimal
/// open facility.
Solution mutate(const Instance& inst, const Solution& sol, double rate, Rng& rng);

struct Nsga2Result {
  /// Rank-0 front snapshot at each requested evaluation budget.
  std::map<long, ParetoSet> checkpoints;
  ParetoSet final_front;
  long evaluations = 0;
  int generations = 0;
};

/// Elitist NSGA-II loop: binary tournament on (rank, crowding), uniform
/// crossover, mutation with repair, merge-and-truncate selection preferring
/// distinct genomes. Objective evaluations are memoized by genome and the
/// budget counts evaluations actually performed; candidate generation retries
/// a few times when it hits an already-evaluated genome. The loop runs until
/// the budget is spent, the reachable neighborhood stops yielding novel
/// genomes, or (optionally) the convergence rule fires. Deterministic per
/// (instance, params.seed).
Nsga2Result nsga2_run(const Instance& inst, const MoeaParams& params);

/// Uniform feasible solutions drawn like the initializer, evaluated;
/// the random-search baseline for comparisons.
std::vector<Solution> random_solutions(const Instance& inst, int count, std::uint64_t seed);

}  // namespace moflp

#endif  // MOFLP_NSGA2_HPP
