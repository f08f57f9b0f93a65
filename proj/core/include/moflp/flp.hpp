#ifndef MOFLP_FLP_HPP
#define MOFLP_FLP_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moflp {

/// Normal velocity model behind delivery reliability: the chance that a
/// vehicle covers distance d within timescale t is P(V >= d/t) for
/// V ~ Normal(mean, stddev), shared across all facility/customer pairs.
struct VelocityModel {
  double mean = 1.0;
  double stddev = 0.3;
};

/// One multi-objective uncapacitated facility-location instance. Matrices are
/// row-major m×n (facility-major). Reliability is precomputed from the
/// velocity model at generation time and stored, so instances are
/// self-contained and serializable.
struct Instance {
  int m = 0;  ///< candidate facilities
  int n = 0;  ///< customers
  std::vector<double> fixed_cost;  // m, > 0
  std::vector<double> demand;      // n, > 0
  std::vector<double> timescale;   // n, > 0
  std::vector<double> distance;    // m*n, >= 0, consistent with coords
  std::vector<double> unit_cost;   // m*n, >= 0
  std::vector<double> reliability; // m*n, in [0,1]
  std::vector<std::array<double, 2>> coords_facility;  // m
  std::vector<std::array<double, 2>> coords_customer;  // n
  std::string id;

  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n + j; }
  double d(int i, int j) const { return distance[idx(i, j)]; }
  double c(int i, int j) const { return unit_cost[idx(i, j)]; }
  double r(int i, int j) const { return reliability[idx(i, j)]; }

  /// Throws ValidationError naming the first violated structural invariant.
  void validate() const;
};

/// Candidate solution: open bits over facilities and, per customer, the index
/// of the serving facility. Objective caches are filled by evaluate().
struct Solution {
  std::vector<std::uint8_t> open;  // m, 0/1
  std::vector<int> assign;         // n, facility index
  std::optional<double> cost;
  std::optional<double> reliability;

  bool operator==(const Solution& other) const {
    return open == other.open && assign == other.assign;
  }
};

/// Objective image of a solution: f1 = total cost (minimized),
/// f2 = system reliability (maximized).
struct ObjectivePoint {
  double f1 = 0.0;
  double f2 = 0.0;
  bool operator==(const ObjectivePoint&) const = default;
};

struct Violation {
  std::string constraint;
  int index = -1;  // customer index for assignment violations, -1 otherwise
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

/// Which decision variables gate the reliability objective.
/// `open_facilities` follows the cost/reliability formulation as printed
/// (every open facility contributes for every customer, so values above 1 are
/// possible); `assignment` restricts each customer to its serving facility.
enum class ReliabilityGate { open_facilities, assignment };

/// Structural feasibility: every customer assigned to an open facility and at
/// least one facility open. Throws ShapeError on dimension mismatch; returns
/// the full list of violations otherwise.
FeasibilityReport check_feasible(const Instance& inst, const Solution& sol);

/// Total cost: sum of fixed costs of open facilities plus demand-weighted
/// transport cost of every assignment. Throws FeasibilityError if infeasible.
double eval_total_cost(const Instance& inst, const Solution& sol);

/// System reliability: demand-weighted pair reliabilities, normalized by the
/// total demand. Throws FeasibilityError if infeasible.
double eval_reliability(const Instance& inst, const Solution& sol,
                        ReliabilityGate gate = ReliabilityGate::open_facilities);

/// Evaluates both objectives and fills the caches. Returns the same solution.
Solution& evaluate(const Instance& inst, Solution& sol,
                   ReliabilityGate gate = ReliabilityGate::open_facilities);

/// Objective image of an evaluated solution; throws DomainError if the caches
/// are missing.
ObjectivePoint objective_point(const Solution& sol);

/// Pair reliabilities R[i*n+j] = P(V >= d_ij / t_j) under the velocity model.
/// All entries land in [0,1]. Throws DomainError on non-positive timescales or
/// a non-positive velocity model.
std::vector<double> pair_reliability(const std::vector<double>& distance, int m, int n,
                                     const std::vector<double>& timescale,
                                     const VelocityModel& velocity);

/// Strict Pareto dominance: no worse in both objectives (cost down,
/// reliability up) and strictly better in at least one.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

/// Cheapest open facility for one customer (by demand-weighted transport
/// cost); ties go to the smallest facility index.
int best_facility_for(const Instance& inst, const std::vector<std::uint8_t>& open,
                      int customer);

/// Cost-minimal assignment for fixed open bits. Reliability does not depend
/// on the assignment, so this choice weakly dominates every other assignment.
/// Throws DomainError if no facility is open.
std::vector<int> optimal_assignment(const Instance& inst,
                                    const std::vector<std::uint8_t>& open);

}  // namespace moflp

#endif  // MOFLP_FLP_HPP
