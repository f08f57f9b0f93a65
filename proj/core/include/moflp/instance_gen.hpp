#ifndef MOFLP_INSTANCE_GEN_HPP
#define MOFLP_INSTANCE_GEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "moflp/flp.hpp"

namespace moflp {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Random-instance recipe. Coordinates are uniform in the unit square, scalar
/// fields uniform over their ranges; the distance matrix follows from the
/// coordinates and the reliability matrix from the velocity model. The same
/// (config, seed) always produces a bit-identical instance.
struct GenConfig {
  int m = 0;
  int n = 0;
  Range fixed_cost{50.0, 150.0};
  Range demand{1.0, 10.0};
  Range timescale{0.5, 1.5};
  Range unit_cost{0.5, 1.5};
  VelocityModel velocity{};
  std::uint64_t seed = 0;

  /// Throws ConfigError on empty or non-positive ranges.
  void validate() const;
};

/// Mutually non-dominated evaluated solutions for one instance.
struct ParetoSet {
  std::string instance_id;
  std::vector<Solution> solutions;

  std::vector<ObjectivePoint> objective_points() const;
  /// Throws ValidationError if empty or if any member dominates another.
  void validate() const;
};

/// Identifier a generator run assigns for this (scale, seed); stable, so file
/// names can be derived without drawing the instance.
std::string instance_id(int m, int n, std::uint64_t seed);

Instance generate_instance(const GenConfig& config);

/// Exhaustive Pareto oracle: enumerates every non-empty open-set (ascending
/// bitmask order), pairs it with the cost-optimal assignment, and keeps the
/// non-dominated subset. Duplicate objective points keep the lowest-mask
/// open-set. Guarded to m <= 12.
ParetoSet brute_force_pareto(const Instance& inst);

/// Instance document (schema-versioned JSON). decode validates invariants.
std::string encode_instance(const Instance& inst);
Instance decode_instance(const std::string& text);

/// ParetoSet document: open bits, assignment vector and both objective values
/// per solution.
std::string encode_pareto(const ParetoSet& ps);
ParetoSet decode_pareto(const std::string& text);

}  // namespace moflp

#endif  // MOFLP_INSTANCE_GEN_HPP
