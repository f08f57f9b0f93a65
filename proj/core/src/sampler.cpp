#include "moflp/sampler.hpp"

#include <algorithm>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"

namespace moflp {

void SampleConfig::validate() const {
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
}

namespace {

constexpr double kMassFloor = 1e-12;

Solution sample_one(const Prediction& pred, const Instance& inst, Rng& rng) {
  Solution sol;
  sol.open.resize(inst.m);
  bool any = false;
  for (int i = 0; i < inst.m; ++i) {
    sol.open[i] = rng.bernoulli(pred.p_node[i]) ? 1 : 0;
    any = any || sol.open[i];
  }
  if (!any) {
    int best = 0;
    for (int i = 1; i < inst.m; ++i) {
      if (pred.p_node[i] > pred.p_node[best]) best = i;  // ties keep lowest index
    }
    sol.open[best] = 1;
  }

  sol.assign.resize(inst.n);
  for (int j = 0; j < inst.n; ++j) {
    double mass = 0.0;
    for (int i = 0; i < inst.m; ++i) {
      if (sol.open[i]) mass += pred.p_edge.at(i, j);
    }
    const double u = rng.uniform();
    int chosen = -1;
    if (mass < kMassFloor) {
      // Uniform over open facilities.
      int open_count = 0;
      for (int i = 0; i < inst.m; ++i) open_count += sol.open[i] ? 1 : 0;
      int target = static_cast<int>(u * open_count);
      if (target >= open_count) target = open_count - 1;
      for (int i = 0; i < inst.m; ++i) {
        if (!sol.open[i]) continue;
        if (target-- == 0) {
          chosen = i;
          break;
        }
      }
    } else {
      // Inverse CDF over the restricted, renormalized column.
      double acc = 0.0;
      for (int i = 0; i < inst.m; ++i) {
        if (!sol.open[i]) continue;
        acc += pred.p_edge.at(i, j) / mass;
        if (u < acc) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) {
        for (int i = inst.m - 1; i >= 0; --i) {
          if (sol.open[i]) {
            chosen = i;
            break;
          }
        }
      }
    }
    sol.assign[j] = chosen;
  }
  return sol;
}

}  // namespace

std::vector<Solution> co_sample(const Prediction& pred, const Instance& inst,
                                const SampleConfig& config) {
  config.validate();
  if (pred.m != inst.m || pred.n != inst.n) {
    throw ShapeError("prediction dimensions (" + std::to_string(pred.m) + "x" +
                     std::to_string(pred.n) + ") do not match instance (" +
                     std::to_string(inst.m) + "x" + std::to_string(inst.n) + ")");
  }

  std::vector<Solution> samples;
  samples.reserve(config.sample_count);
  for (int s = 0; s < config.sample_count; ++s) {
    Rng rng(derive_seed(config.seed, {seed_stream::sample, static_cast<std::uint64_t>(s)}));
    Solution sol = sample_one(pred, inst, rng);
    evaluate(inst, sol);
    samples.push_back(std::move(sol));
  }
  return samples;
}

ParetoSet nondominated_filter(const std::vector<Solution>& solutions) {
  if (solutions.empty()) throw DomainError("nondominated_filter requires at least one solution");
  std::vector<ObjectivePoint> pts;
  pts.reserve(solutions.size());
  for (const auto& s : solutions) pts.push_back(objective_point(s));

  ParetoSet out;
  for (std::size_t a = 0; a < solutions.size(); ++a) {
    bool keep = true;
    for (std::size_t b = 0; b < solutions.size() && keep; ++b) {
      if (b == a) continue;
      if (dominates(pts[b], pts[a])) keep = false;
      if (pts[b] == pts[a] && b < a) keep = false;  // dedup keeps first occurrence
    }
    if (keep) out.solutions.push_back(solutions[a]);
  }
  return out;
}

}  // namespace moflp
