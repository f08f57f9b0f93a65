#include "moflp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <json.hpp>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"

namespace moflp {

using json = nlohmann::ordered_json;

void LabelPair::validate() const {
  if (m < 1 || n < 1) throw ValidationError("labels require m >= 1 and n >= 1");
  if (p_node.size() != static_cast<std::size_t>(m)) throw ValidationError("p_node length != m");
  if (p_edge.size() != static_cast<std::size_t>(m) * n)
    throw ValidationError("p_edge size != m*n");
  for (double p : p_node) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p_node entries must lie in [0,1]");
  }
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (int i = 0; i < m; ++i) {
      const double p = edge(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p_edge entries must lie in [0,1]");
      if (p > 0.0 && !(p_node[i] > 0.0)) {
        throw ValidationError("p_edge[" + std::to_string(i) + "][" + std::to_string(j) +
                              "] > 0 but p_node[" + std::to_string(i) + "] = 0");
      }
      col += p;
    }
    if (std::fabs(col - 1.0) > 1e-9) {
      throw ValidationError("p_edge column " + std::to_string(j) + " sums to " +
                            std::to_string(col) + ", expected 1");
    }
  }
}

LabelPair derive_labels(const ParetoSet& pareto, int m, int n) {
  if (pareto.solutions.empty()) throw DomainError("derive_labels requires a non-empty Pareto set");
  LabelPair labels;
  labels.m = m;
  labels.n = n;
  labels.p_node.assign(m, 0.0);
  labels.p_edge.assign(static_cast<std::size_t>(m) * n, 0.0);

  for (const auto& sol : pareto.solutions) {
    if (sol.open.size() != static_cast<std::size_t>(m) ||
        sol.assign.size() != static_cast<std::size_t>(n)) {
      throw ShapeError("Pareto solution dimensions do not match (m, n)");
    }
    for (int i = 0; i < m; ++i)
      if (sol.open[i]) labels.p_node[i] += 1.0;
    for (int j = 0; j < n; ++j)
      labels.p_edge[static_cast<std::size_t>(sol.assign[j]) * n + j] += 1.0;
  }

  const double k = static_cast<double>(pareto.solutions.size());
  for (auto& v : labels.p_node) v /= k;
  for (auto& v : labels.p_edge) v /= k;
  labels.validate();
  return labels;
}

std::string encode_labels(const LabelPair& labels, const std::string& instance_id) {
  json doc;
  doc["schema"] = 1;
  doc["kind"] = "labels";
  doc["instance_id"] = instance_id;
  doc["m"] = labels.m;
  doc["n"] = labels.n;
  doc["p_node"] = labels.p_node;
  doc["p_edge"] = labels.p_edge;
  return doc.dump(1) + "\n";
}

std::pair<LabelPair, std::string> decode_labels(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed labels document: ") + e.what());
  }
  LabelPair labels;
  std::string id;
  try {
    if (!doc.contains("instance_id")) throw ParseError("missing field 'instance_id'");
    if (!doc.contains("p_node")) throw ParseError("missing field 'p_node'");
    if (!doc.contains("p_edge")) throw ParseError("missing field 'p_edge'");
    id = doc["instance_id"].get<std::string>();
    labels.m = doc.at("m").get<int>();
    labels.n = doc.at("n").get<int>();
    labels.p_node = doc["p_node"].get<std::vector<double>>();
    labels.p_edge = doc["p_edge"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("labels document: ") + e.what());
  }
  labels.validate();
  return {std::move(labels), std::move(id)};
}

FeatureVariant variant_from_string(const std::string& s) {
  if (s == "A" || s == "a") return FeatureVariant::A;
  if (s == "B" || s == "b") return FeatureVariant::B;
  throw ConfigError("unknown feature variant '" + s + "' (expected A or B)");
}

std::string to_string(FeatureVariant v) { return v == FeatureVariant::A ? "A" : "B"; }

int node_feature_width(FeatureVariant v) { return v == FeatureVariant::A ? 3 : 9; }

int edge_feature_width() { return 4; }

namespace {

/// z-scores column `col` over the row range [begin, end); constant columns
/// become all-zero. Returns the stats used.
ColumnStats standardize_column(std::vector<double>& data, int width, int col,
                               std::size_t begin, std::size_t end) {
  ColumnStats stats;
  stats.standardized = true;
  const std::size_t count = end - begin;
  double mean = 0.0;
  for (std::size_t r = begin; r < end; ++r) mean += data[r * width + col];
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    const double d = data[r * width + col] - mean;
    var += d * d;
  }
  var /= static_cast<double>(count);
  const double sd = std::sqrt(var);
  stats.mean = mean;
  stats.stddev = sd;
  if (sd < 1e-12) {
    for (std::size_t r = begin; r < end; ++r) data[r * width + col] = 0.0;
  } else {
    for (std::size_t r = begin; r < end; ++r)
      data[r * width + col] = (data[r * width + col] - mean) / sd;
  }
  return stats;
}

struct Aggregate {
  double mean, min, max;
};

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a{0.0, std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()};
  for (double v : values) {
    a.mean += v;
    a.min = std::min(a.min, v);
    a.max = std::max(a.max, v);
  }
  a.mean /= static_cast<double>(values.size());
  return a;
}

}  // namespace

GraphFeatures extract_features(const Instance& inst, FeatureVariant variant) {
  GraphFeatures gf;
  gf.variant = variant;
  gf.m = inst.m;
  gf.n = inst.n;
  gf.node_width = node_feature_width(variant);
  gf.edge_width = edge_feature_width();
  const int rows = inst.m + inst.n;
  gf.node_feats.assign(static_cast<std::size_t>(rows) * gf.node_width, 0.0);
  gf.edge_feats.assign(static_cast<std::size_t>(inst.m) * inst.n * gf.edge_width, 0.0);

  auto node = [&](int row, int col) -> double& {
    return gf.node_feats[static_cast<std::size_t>(row) * gf.node_width + col];
  };

  // Columns 0..2: category indicator, demand (customers), fixed cost (facilities).
  for (int i = 0; i < inst.m; ++i) {
    node(i, 0) = 0.0;
    node(i, 2) = inst.fixed_cost[i];
  }
  for (int j = 0; j < inst.n; ++j) {
    node(inst.m + j, 0) = 1.0;
    node(inst.m + j, 1) = inst.demand[j];
  }

  if (variant == FeatureVariant::B) {
    std::vector<double> incident;
    for (int i = 0; i < inst.m; ++i) {
      incident.clear();
      for (int j = 0; j < inst.n; ++j) incident.push_back(inst.c(i, j));
      const auto ac = aggregate(incident);
      incident.clear();
      for (int j = 0; j < inst.n; ++j) incident.push_back(inst.r(i, j));
      const auto ar = aggregate(incident);
      node(i, 3) = ac.mean;
      node(i, 4) = ac.min;
      node(i, 5) = ac.max;
      node(i, 6) = ar.mean;
      node(i, 7) = ar.min;
      node(i, 8) = ar.max;
    }
    for (int j = 0; j < inst.n; ++j) {
      incident.clear();
      for (int i = 0; i < inst.m; ++i) incident.push_back(inst.c(i, j));
      const auto ac = aggregate(incident);
      incident.clear();
      for (int i = 0; i < inst.m; ++i) incident.push_back(inst.r(i, j));
      const auto ar = aggregate(incident);
      node(inst.m + j, 3) = ac.mean;
      node(inst.m + j, 4) = ac.min;
      node(inst.m + j, 5) = ac.max;
      node(inst.m + j, 6) = ar.mean;
      node(inst.m + j, 7) = ar.min;
      node(inst.m + j, 8) = ar.max;
    }
  }

  for (int i = 0; i < inst.m; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      const std::size_t row = inst.idx(i, j);
      gf.edge_feats[row * gf.edge_width + 0] = 1.0;  // complete bipartite adjacency
      gf.edge_feats[row * gf.edge_width + 1] = inst.d(i, j);
      gf.edge_feats[row * gf.edge_width + 2] = inst.c(i, j);
      gf.edge_feats[row * gf.edge_width + 3] = inst.r(i, j);
    }
  }

  // Standardization. Indicator columns (node category, edge adjacency) stay raw.
  gf.node_stats.assign(gf.node_width, ColumnStats{});
  gf.edge_stats.assign(gf.edge_width, ColumnStats{});
  const std::size_t mrows = inst.m;
  const std::size_t all_nodes = rows;
  gf.node_stats[1] = standardize_column(gf.node_feats, gf.node_width, 1, mrows, all_nodes);
  gf.node_stats[2] = standardize_column(gf.node_feats, gf.node_width, 2, 0, mrows);
  if (variant == FeatureVariant::B) {
    for (int col = 3; col < 9; ++col) {
      gf.node_stats[col] = standardize_column(gf.node_feats, gf.node_width, col, 0, all_nodes);
    }
  }
  const std::size_t edges = static_cast<std::size_t>(inst.m) * inst.n;
  for (int col = 1; col < gf.edge_width; ++col) {
    gf.edge_stats[col] = standardize_column(gf.edge_feats, gf.edge_width, col, 0, edges);
  }
  return gf;
}

std::tuple<Dataset, Dataset, Dataset> build_dataset(
    std::vector<std::pair<Instance, ParetoSet>> pairs, const SplitFractions& fractions,
    std::uint64_t seed) {
  if (pairs.empty()) throw DomainError("build_dataset requires at least one instance");
  if (fractions.train < 0.0 || fractions.val < 0.0 || fractions.test < 0.0 ||
      std::fabs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be non-negative and sum to 1");
  }
  const int m = pairs.front().first.m;
  const int n = pairs.front().first.n;
  std::set<std::string> ids;
  for (const auto& [inst, front] : pairs) {
    if (inst.m != m || inst.n != n) {
      throw ValidationError("all dataset instances must share one scale (expected " +
                            std::to_string(m) + "x" + std::to_string(n) + ", got " +
                            std::to_string(inst.m) + "x" + std::to_string(inst.n) + ")");
    }
    if (!ids.insert(inst.id).second)
      throw ValidationError("duplicate instance id '" + inst.id + "'");
    if (front.instance_id != inst.id)
      throw ValidationError("front/instance id mismatch for '" + inst.id + "'");
  }

  // Deterministic Fisher-Yates shuffle.
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Rng rng(derive_seed(seed, {seed_stream::dataset}));
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[rng.index(k)]);
  }

  const auto total = static_cast<double>(pairs.size());
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * total));
  const auto n_val = static_cast<std::size_t>(std::llround(fractions.val * total));
  if (n_train + n_val > pairs.size())
    throw ValidationError("split fractions round to more entries than available");

  auto make_entry = [](std::pair<Instance, ParetoSet>& pair) {
    DatasetEntry entry;
    entry.labels = derive_labels(pair.second, pair.first.m, pair.first.n);
    entry.features_a = extract_features(pair.first, FeatureVariant::A);
    entry.features_b = extract_features(pair.first, FeatureVariant::B);
    entry.instance = std::move(pair.first);
    entry.front = std::move(pair.second);
    return entry;
  };

  Dataset train{"train", m, n, {}};
  Dataset val{"val", m, n, {}};
  Dataset test{"test", m, n, {}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    DatasetEntry entry = make_entry(pairs[order[k]]);
    if (k < n_train) {
      train.entries.push_back(std::move(entry));
    } else if (k < n_train + n_val) {
      val.entries.push_back(std::move(entry));
    } else {
      test.entries.push_back(std::move(entry));
    }
  }
  return {std::move(train), std::move(val), std::move(test)};
}

std::vector<std::vector<std::size_t>> batch_iter(const Dataset& dataset, int batch_size,
                                                 std::uint64_t epoch_seed) {
  if (dataset.entries.empty()) throw DomainError("batch_iter requires a non-empty dataset");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");

  std::vector<std::size_t> order(dataset.entries.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Rng rng(epoch_seed);
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[rng.index(k)]);
  }

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace moflp
