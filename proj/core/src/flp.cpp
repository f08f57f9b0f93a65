#include "moflp/flp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "moflp/errors.hpp"

namespace moflp {

namespace {

constexpr double kCoordDistanceTol = 1e-9;

double euclidean(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

/// Standard normal CDF.
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace

void Instance::validate() const {
  require(m >= 1 && n >= 1, "instance requires m >= 1 and n >= 1");
  const auto mn = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  require(fixed_cost.size() == static_cast<std::size_t>(m), "fixed_cost length != m");
  require(demand.size() == static_cast<std::size_t>(n), "demand length != n");
  require(timescale.size() == static_cast<std::size_t>(n), "timescale length != n");
  require(distance.size() == mn, "distance matrix size != m*n");
  require(unit_cost.size() == mn, "unit_cost matrix size != m*n");
  require(reliability.size() == mn, "reliability matrix size != m*n");
  require(coords_facility.size() == static_cast<std::size_t>(m), "coords_facility length != m");
  require(coords_customer.size() == static_cast<std::size_t>(n), "coords_customer length != n");

  for (int i = 0; i < m; ++i)
    require(fixed_cost[i] > 0.0, "fixed_cost must be strictly positive (facility " + std::to_string(i) + ")");
  for (int j = 0; j < n; ++j) {
    require(demand[j] > 0.0, "demand must be strictly positive (customer " + std::to_string(j) + ")");
    require(timescale[j] > 0.0, "timescale must be strictly positive (customer " + std::to_string(j) + ")");
  }
  for (std::size_t k = 0; k < mn; ++k) {
    require(distance[k] >= 0.0, "distance entries must be non-negative");
    require(unit_cost[k] >= 0.0, "unit_cost entries must be non-negative");
    require(reliability[k] >= 0.0 && reliability[k] <= 1.0,
            "reliability entries must lie in [0,1] (entry " + std::to_string(k) + ")");
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double expect = euclidean(coords_facility[i], coords_customer[j]);
      if (std::fabs(expect - d(i, j)) > kCoordDistanceTol) {
        std::ostringstream os;
        os << "distance[" << i << "][" << j << "] = " << d(i, j)
           << " disagrees with coordinates (expected " << expect << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

std::string FeasibilityReport::describe() const {
  if (ok()) return "feasible";
  std::ostringstream os;
  os << "infeasible:";
  for (const auto& v : violations) {
    os << " {" << v.constraint;
    if (v.index >= 0) os << " at customer " << v.index;
    os << "}";
  }
  return os.str();
}

FeasibilityReport check_feasible(const Instance& inst, const Solution& sol) {
  if (sol.open.size() != static_cast<std::size_t>(inst.m) ||
      sol.assign.size() != static_cast<std::size_t>(inst.n)) {
    throw ShapeError("solution dimensions do not match instance (open " +
                     std::to_string(sol.open.size()) + " vs m=" + std::to_string(inst.m) +
                     ", assign " + std::to_string(sol.assign.size()) +
                     " vs n=" + std::to_string(inst.n) + ")");
  }
  for (int j = 0; j < inst.n; ++j) {
    if (sol.assign[j] < 0 || sol.assign[j] >= inst.m) {
      throw ShapeError("assignment index out of range at customer " + std::to_string(j));
    }
  }

  FeasibilityReport report;
  bool any_open = false;
  for (auto b : sol.open) any_open = any_open || (b != 0);
  if (!any_open) report.violations.push_back({"no facility open", -1});
  for (int j = 0; j < inst.n; ++j) {
    if (!sol.open[sol.assign[j]]) {
      report.violations.push_back({"assignment to closed facility (Y <= X)", j});
    }
  }
  return report;
}

namespace {

void require_feasible(const Instance& inst, const Solution& sol) {
  const auto report = check_feasible(inst, sol);
  if (!report.ok()) throw FeasibilityError(report.describe());
}

}  // namespace

double eval_total_cost(const Instance& inst, const Solution& sol) {
  require_feasible(inst, sol);
  double total = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    if (sol.open[i]) total += inst.fixed_cost[i];
  }
  for (int j = 0; j < inst.n; ++j) {
    const int i = sol.assign[j];
    total += inst.demand[j] * inst.d(i, j) * inst.c(i, j);
  }
  return total;
}

double eval_reliability(const Instance& inst, const Solution& sol, ReliabilityGate gate) {
  require_feasible(inst, sol);
  double demand_total = 0.0;
  for (int j = 0; j < inst.n; ++j) demand_total += inst.demand[j];

  double weighted = 0.0;
  if (gate == ReliabilityGate::open_facilities) {
    for (int i = 0; i < inst.m; ++i) {
      if (!sol.open[i]) continue;
      for (int j = 0; j < inst.n; ++j) weighted += inst.demand[j] * inst.r(i, j);
    }
  } else {
    for (int j = 0; j < inst.n; ++j) weighted += inst.demand[j] * inst.r(sol.assign[j], j);
  }
  return weighted / demand_total;
}

Solution& evaluate(const Instance& inst, Solution& sol, ReliabilityGate gate) {
  sol.cost = eval_total_cost(inst, sol);
  sol.reliability = eval_reliability(inst, sol, gate);
  return sol;
}

ObjectivePoint objective_point(const Solution& sol) {
  if (!sol.cost || !sol.reliability) {
    throw DomainError("solution has no cached objective values; call evaluate() first");
  }
  return {*sol.cost, *sol.reliability};
}

std::vector<double> pair_reliability(const std::vector<double>& distance, int m, int n,
                                     const std::vector<double>& timescale,
                                     const VelocityModel& velocity) {
  if (m < 1 || n < 1) throw DomainError("pair_reliability requires m,n >= 1");
  if (distance.size() != static_cast<std::size_t>(m) * n)
    throw ShapeError("distance matrix size != m*n");
  if (timescale.size() != static_cast<std::size_t>(n))
    throw ShapeError("timescale length != n");
  if (!(velocity.mean > 0.0) || !(velocity.stddev > 0.0))
    throw DomainError("velocity model requires positive mean and deviation");
  for (int j = 0; j < n; ++j) {
    if (!(timescale[j] > 0.0))
      throw DomainError("timescale must be strictly positive (customer " + std::to_string(j) + ")");
  }

  std::vector<double> out(distance.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * n + j;
      const double required_speed = distance[k] / timescale[j];
      const double z = (required_speed - velocity.mean) / velocity.stddev;
      out[k] = 1.0 - normal_cdf(z);
    }
  }
  return out;
}

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  return (a.f1 <= b.f1 && a.f2 >= b.f2) && (a.f1 < b.f1 || a.f2 > b.f2);
}

int best_facility_for(const Instance& inst, const std::vector<std::uint8_t>& open,
                      int customer) {
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int i = 0; i < inst.m; ++i) {
    if (!open[i]) continue;
    const double cost = inst.demand[customer] * inst.d(i, customer) * inst.c(i, customer);
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  if (best < 0) throw DomainError("no facility open");
  return best;
}

std::vector<int> optimal_assignment(const Instance& inst,
                                    const std::vector<std::uint8_t>& open) {
  if (open.size() != static_cast<std::size_t>(inst.m))
    throw ShapeError("open bits length != m");
  bool any = false;
  for (auto b : open) any = any || (b != 0);
  if (!any) throw DomainError("no facility open");

  std::vector<int> assign(inst.n);
  for (int j = 0; j < inst.n; ++j) assign[j] = best_facility_for(inst, open, j);
  return assign;
}

}  // namespace moflp
