#ifndef MOFLP_SAMPLER_HPP
#define MOFLP_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "moflp/gcn.hpp"
#include "moflp/instance_gen.hpp"

namespace moflp {

/// One-shot decode settings. Each sample draws from its own substream derived
/// from (seed, sample index), so parallel and sequential sampling agree.
struct SampleConfig {
  int sample_count = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Decodes the dual prediction into feasible evaluated solutions: open bits
/// are independent Bernoulli draws from p_node (falling back to the argmax
/// facility when all come up closed, lowest index on ties); each customer
/// samples its facility from its p_edge column restricted to open facilities
/// and renormalized (uniform over open facilities when the restricted mass is
/// below 1e-12). No search or repair beyond these fallbacks.
std::vector<Solution> co_sample(const Prediction& pred, const Instance& inst,
                                const SampleConfig& config);

/// Maximal mutually non-dominated subset of evaluated solutions; duplicate
/// objective points keep the first occurrence. Throws DomainError on empty
/// input.
ParetoSet nondominated_filter(const std::vector<Solution>& solutions);

}  // namespace moflp

#endif  // MOFLP_SAMPLER_HPP
