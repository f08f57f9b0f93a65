#ifndef MOFLP_DATASET_HPP
#define MOFLP_DATASET_HPP

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "moflp/instance_gen.hpp"

namespace moflp {

/// Supervised targets derived from a Pareto set: p_node[i] is the fraction of
/// front solutions opening facility i; p_edge (m×n, row-major) column j is the
/// empirical assignment distribution of customer j over facilities, so each
/// column sums to one.
struct LabelPair {
  int m = 0;
  int n = 0;
  std::vector<double> p_node;  // m
  std::vector<double> p_edge;  // m*n

  double edge(int i, int j) const { return p_edge[static_cast<std::size_t>(i) * n + j]; }
  void validate() const;
};

LabelPair derive_labels(const ParetoSet& pareto, int m, int n);

std::string encode_labels(const LabelPair& labels, const std::string& instance_id);
/// Returns (labels, instance_id).
std::pair<LabelPair, std::string> decode_labels(const std::string& text);

/// Input feature sets for the bipartite graph.
///   A: node category, customer demand, facility fixed cost.
///   B: A plus mean/min/max of incident-edge transport cost and reliability.
/// Edge features are shared: adjacency constant, distance, transport cost,
/// reliability.
enum class FeatureVariant { A, B };

FeatureVariant variant_from_string(const std::string& s);
std::string to_string(FeatureVariant v);

/// Per-column standardization statistics (identity for indicator columns).
struct ColumnStats {
  double mean = 0.0;
  double stddev = 1.0;
  bool standardized = false;
};

/// Standardized graph features for one instance. Node rows order facilities
/// first, then customers. Edge rows are facility-major (i*n + j). Quantity
/// columns are z-scored per instance over the population that owns them
/// (demand over customers, fixed cost over facilities, edge quantities over
/// all edges, incident aggregates over all nodes); indicator columns (node
/// category, edge adjacency) stay raw. Zero-variance columns standardize to 0.
struct GraphFeatures {
  FeatureVariant variant = FeatureVariant::A;
  int m = 0;
  int n = 0;
  int node_width = 0;
  int edge_width = 0;
  std::vector<double> node_feats;  // (m+n) * node_width, row-major
  std::vector<double> edge_feats;  // (m*n) * edge_width, row-major
  std::vector<ColumnStats> node_stats;
  std::vector<ColumnStats> edge_stats;

  double node_at(int row, int col) const {
    return node_feats[static_cast<std::size_t>(row) * node_width + col];
  }
  double edge_at(int row, int col) const {
    return edge_feats[static_cast<std::size_t>(row) * edge_width + col];
  }
};

int node_feature_width(FeatureVariant v);
int edge_feature_width();

GraphFeatures extract_features(const Instance& inst, FeatureVariant variant);

/// One training example: the instance, its ground-truth front, derived labels
/// and both feature variants (cheap to precompute, kept for reuse).
struct DatasetEntry {
  Instance instance;
  ParetoSet front;
  LabelPair labels;
  GraphFeatures features_a;
  GraphFeatures features_b;

  const GraphFeatures& features(FeatureVariant v) const {
    return v == FeatureVariant::A ? features_a : features_b;
  }
};

struct Dataset {
  std::string split;  // "train" | "val" | "test"
  int m = 0;
  int n = 0;
  std::vector<DatasetEntry> entries;
};

struct SplitFractions {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;
};

/// Deterministic shuffled split. All instances must share one (m, n) scale and
/// have unique ids; fractions must sum to 1.
std::tuple<Dataset, Dataset, Dataset> build_dataset(
    std::vector<std::pair<Instance, ParetoSet>> pairs, const SplitFractions& fractions,
    std::uint64_t seed);

/// Index batches for one epoch: a seed-shuffled permutation cut into chunks of
/// batch_size; the final short batch is kept. Throws DomainError on an empty
/// dataset.
std::vector<std::vector<std::size_t>> batch_iter(const Dataset& dataset, int batch_size,
                                                 std::uint64_t epoch_seed);

}  // namespace moflp

#endif  // MOFLP_DATASET_HPP
