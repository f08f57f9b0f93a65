#include "moflp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "moflp/errors.hpp"
#include "moflp/metrics.hpp"
#include "moflp/parallel.hpp"
#include "moflp/report.hpp"
#include "moflp/rng.hpp"
#include "moflp/util.hpp"

namespace moflp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (scales.empty()) throw ConfigError("at least one scale is required");
  for (const auto& s : scales) {
    if (s.m < 1 || s.n < 1) throw ConfigError("scales require m >= 1 and n >= 1");
  }
  if (instances_per_scale < 1) throw ConfigError("instances_per_scale must be >= 1");
  if (budgets.empty()) throw ConfigError("at least one comparison budget is required");
  for (long b : budgets) {
    if (b < moea.population_size)
      throw ConfigError("comparison budgets must cover at least one population");
  }
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (front_svg_count < 0) throw ConfigError("front_svg_count must be >= 0");
  moea.validate();
  model.validate();
  sample.validate();
  if (hyper.batch_size < 1 || hyper.epochs < 0)
    throw ConfigError("training hyperparameters out of range");
  GenConfig probe = gen;
  probe.m = scales.front().m;
  probe.n = scales.front().n;
  probe.validate();
}

ExperimentConfig default_desk_config() {
  ExperimentConfig config;
  config.seed = 1;
  config.out_dir = "out/desk";
  config.scales = {{10, 25}};
  config.instances_per_scale = 130;
  config.fractions = {100.0 / 130.0, 10.0 / 130.0, 20.0 / 130.0};
  config.moea.population_size = 100;
  config.moea.max_evaluations = 20000;
  config.budgets = {500, 1000, 2000, 4000};
  config.repeats = 3;
  config.model.hidden = 64;
  config.model.l_gcn = 3;
  config.model.l_mlp = 3;
  config.hyper.batch_size = 20;
  config.hyper.learning_rate = 1e-3;
  config.hyper.epochs = 300;
  config.sample.sample_count = 200;
  return config;
}

namespace {

Range range_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError(std::string("config field '") + name + "' must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed config document: ") + e.what());
  }
  ExperimentConfig config = default_desk_config();
  try {
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("out_dir")) config.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
    if (doc.contains("scales")) {
      config.scales.clear();
      for (const auto& s : doc["scales"]) {
        config.scales.push_back({s.at("m").get<int>(), s.at("n").get<int>()});
      }
    }
    if (doc.contains("instances_per_scale"))
      config.instances_per_scale = doc["instances_per_scale"].get<int>();
    if (doc.contains("split_counts")) {
      const auto& c = doc["split_counts"];
      const double tr = c.at("train").get<double>();
      const double va = c.at("val").get<double>();
      const double te = c.at("test").get<double>();
      const double total = tr + va + te;
      config.instances_per_scale = static_cast<int>(std::llround(total));
      config.fractions = {tr / total, va / total, te / total};
    } else if (doc.contains("split_fractions")) {
      const auto& f = doc["split_fractions"];
      config.fractions = {f.at("train").get<double>(), f.at("val").get<double>(),
                          f.at("test").get<double>()};
    }
    if (doc.contains("generator")) {
      const auto& g = doc["generator"];
      if (g.contains("fixed_cost")) config.gen.fixed_cost = range_from_json(g["fixed_cost"], "fixed_cost");
      if (g.contains("demand")) config.gen.demand = range_from_json(g["demand"], "demand");
      if (g.contains("timescale")) config.gen.timescale = range_from_json(g["timescale"], "timescale");
      if (g.contains("unit_cost")) config.gen.unit_cost = range_from_json(g["unit_cost"], "unit_cost");
      if (g.contains("velocity_mean")) config.gen.velocity.mean = g["velocity_mean"].get<double>();
      if (g.contains("velocity_stddev"))
        config.gen.velocity.stddev = g["velocity_stddev"].get<double>();
    }
    if (doc.contains("moea")) {
      const auto& m = doc["moea"];
      if (m.contains("population_size")) config.moea.population_size = m["population_size"].get<int>();
      if (m.contains("max_evaluations")) config.moea.max_evaluations = m["max_evaluations"].get<long>();
      if (m.contains("crossover_rate")) config.moea.crossover_rate = m["crossover_rate"].get<double>();
      if (m.contains("mutation_rate") && !m["mutation_rate"].is_null())
        config.moea.mutation_rate = m["mutation_rate"].get<double>();
      if (m.contains("convergence_tol")) config.moea.convergence_tol = m["convergence_tol"].get<double>();
      if (m.contains("convergence_window"))
        config.moea.convergence_window = m["convergence_window"].get<int>();
    }
    if (doc.contains("budgets")) config.budgets = doc["budgets"].get<std::vector<long>>();
    if (doc.contains("repeats")) config.repeats = doc["repeats"].get<int>();
    if (doc.contains("model")) {
      const auto& m = doc["model"];
      if (m.contains("hidden")) config.model.hidden = m["hidden"].get<int>();
      if (m.contains("l_gcn")) config.model.l_gcn = m["l_gcn"].get<int>();
      if (m.contains("l_mlp")) config.model.l_mlp = m["l_mlp"].get<int>();
      if (m.contains("variant"))
        config.model.variant = variant_from_string(m["variant"].get<std::string>());
      if (m.contains("delta")) config.model.delta = m["delta"].get<double>();
    }
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      if (t.contains("batch_size")) config.hyper.batch_size = t["batch_size"].get<int>();
      if (t.contains("learning_rate")) config.hyper.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("epochs")) config.hyper.epochs = t["epochs"].get<int>();
    }
    if (doc.contains("samples")) config.sample.sample_count = doc["samples"].get<int>();
    if (doc.contains("front_svg_count")) config.front_svg_count = doc["front_svg_count"].get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config document: ") + e.what());
  }
  config.validate();
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["schema"] = 1;
  doc["seed"] = config.seed;
  doc["out_dir"] = config.out_dir;
  doc["workers"] = config.workers;
  json scales = json::array();
  for (const auto& s : config.scales) scales.push_back({{"m", s.m}, {"n", s.n}});
  doc["scales"] = std::move(scales);
  doc["instances_per_scale"] = config.instances_per_scale;
  doc["split_fractions"] = {{"train", config.fractions.train},
                            {"val", config.fractions.val},
                            {"test", config.fractions.test}};
  doc["generator"] = {{"fixed_cost", range_to_json(config.gen.fixed_cost)},
                      {"demand", range_to_json(config.gen.demand)},
                      {"timescale", range_to_json(config.gen.timescale)},
                      {"unit_cost", range_to_json(config.gen.unit_cost)},
                      {"velocity_mean", config.gen.velocity.mean},
                      {"velocity_stddev", config.gen.velocity.stddev}};
  doc["moea"] = {{"population_size", config.moea.population_size},
                 {"max_evaluations", config.moea.max_evaluations},
                 {"crossover_rate", config.moea.crossover_rate},
                 {"mutation_rate",
                  config.moea.mutation_rate ? json(*config.moea.mutation_rate) : json()},
                 {"convergence_tol", config.moea.convergence_tol},
                 {"convergence_window", config.moea.convergence_window}};
  doc["budgets"] = config.budgets;
  doc["repeats"] = config.repeats;
  doc["model"] = {{"hidden", config.model.hidden},
                  {"l_gcn", config.model.l_gcn},
                  {"l_mlp", config.model.l_mlp},
                  {"variant", to_string(config.model.variant)},
                  {"delta", config.model.delta}};
  doc["train"] = {{"batch_size", config.hyper.batch_size},
                  {"learning_rate", config.hyper.learning_rate},
                  {"epochs", config.hyper.epochs}};
  doc["samples"] = config.sample.sample_count;
  doc["front_svg_count"] = config.front_svg_count;
  return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Paths, ids, manifest
// ---------------------------------------------------------------------------

namespace paths {

fs::path manifest(const ExperimentConfig& c) { return fs::path(c.out_dir) / "manifest.json"; }

fs::path instance_dir(const ExperimentConfig& c, const ScaleSpec& s) {
  return fs::path(c.out_dir) / "instances" / s.tag();
}
fs::path front_dir(const ExperimentConfig& c, const ScaleSpec& s) {
  return fs::path(c.out_dir) / "fronts" / s.tag();
}
fs::path dataset_dir(const ExperimentConfig& c, const ScaleSpec& s) {
  return fs::path(c.out_dir) / "dataset" / s.tag();
}
fs::path model_dir(const ExperimentConfig& c, const ScaleSpec& s) {
  return fs::path(c.out_dir) / "models" / s.tag() /
         ("dual_" + to_string(c.model.variant));
}
fs::path compare_dir(const ExperimentConfig& c, const ScaleSpec& s) {
  return fs::path(c.out_dir) / "compare" / s.tag();
}
fs::path sweep_dir(const ExperimentConfig& c, const ScaleSpec& s, const std::string& axis) {
  return fs::path(c.out_dir) / "sweep" / s.tag() / axis;
}

}  // namespace paths

namespace {

std::uint64_t instance_seed(const ExperimentConfig& c, std::size_t scale_idx, int k) {
  return derive_seed(c.seed, {seed_stream::gen, scale_idx, static_cast<std::uint64_t>(k)});
}

std::vector<std::string> instance_ids(const ExperimentConfig& c, const ScaleSpec& s,
                                      std::size_t scale_idx) {
  std::vector<std::string> ids;
  ids.reserve(c.instances_per_scale);
  for (int k = 0; k < c.instances_per_scale; ++k) {
    ids.push_back(instance_id(s.m, s.n, instance_seed(c, scale_idx, k)));
  }
  return ids;
}

class Manifest {
 public:
  explicit Manifest(fs::path path) : path_(std::move(path)) {
    if (fs::exists(path_)) {
      doc_ = json::parse(read_text_file(path_));
    } else {
      doc_ = json{{"schema", 1}, {"stages", json::object()}};
    }
  }

  std::string stage_hash(const std::string& key) const {
    const auto& stages = doc_.at("stages");
    auto it = stages.find(key);
    return it == stages.end() ? std::string() : it->get<std::string>();
  }

  void record(const std::string& key, const std::string& hash) {
    doc_["stages"][key] = hash;
    write_text_file(path_, doc_.dump(1) + "\n");
  }

 private:
  fs::path path_;
  json doc_;
};

/// Runs compute() unless the stage is cached: artifacts present and the
/// recorded hash equal to `hash`. Artifacts present under a different hash
/// raise StaleCacheError unless force is set.
bool ensure_stage(const ExperimentConfig& config, const std::string& key,
                  const std::string& hash, bool force,
                  const std::function<bool()>& artifacts_exist,
                  const std::function<void()>& compute) {
  Manifest manifest(paths::manifest(config));
  const std::string recorded = manifest.stage_hash(key);
  const bool present = artifacts_exist();
  if (present && recorded == hash) return false;
  if (present && !recorded.empty() && recorded != hash && !force) {
    throw StaleCacheError("stage '" + key + "' artifacts under " + config.out_dir +
                          " were built with a different configuration; pass --force to rebuild");
  }
  compute();
  manifest.record(key, hash);
  return true;
}

std::string chain_hash(const std::string& parent, const json& stage_config) {
  return hex64(fnv1a(stage_config.dump() + "|" + parent));
}

json gen_stage_config(const ExperimentConfig& c, const ScaleSpec& s) {
  return json{{"m", s.m},
              {"n", s.n},
              {"count", c.instances_per_scale},
              {"fixed_cost", range_to_json(c.gen.fixed_cost)},
              {"demand", range_to_json(c.gen.demand)},
              {"timescale", range_to_json(c.gen.timescale)},
              {"unit_cost", range_to_json(c.gen.unit_cost)},
              {"velocity", {c.gen.velocity.mean, c.gen.velocity.stddev}},
              {"seed", c.seed}};
}

json solve_stage_config(const ExperimentConfig& c) {
  return json{{"population_size", c.moea.population_size},
              {"max_evaluations", c.moea.max_evaluations},
              {"crossover_rate", c.moea.crossover_rate},
              {"mutation_rate",
               c.moea.mutation_rate ? json(*c.moea.mutation_rate) : json()},
              {"convergence_tol", c.moea.convergence_tol},
              {"convergence_window", c.moea.convergence_window}};
}

json model_stage_config(const ExperimentConfig& c) {
  return json{{"hidden", c.model.hidden},
              {"l_gcn", c.model.l_gcn},
              {"l_mlp", c.model.l_mlp},
              {"variant", to_string(c.model.variant)},
              {"delta", c.model.delta},
              {"batch_size", c.hyper.batch_size},
              {"learning_rate", c.hyper.learning_rate},
              {"epochs", c.hyper.epochs}};
}

std::string hash_gen(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash("", gen_stage_config(c, s));
}
std::string hash_solve(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash(hash_gen(c, s), solve_stage_config(c));
}
std::string hash_labels(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash(hash_solve(c, s), json{{"rule", "pareto-marginals"}});
}
std::string hash_split(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash(hash_labels(c, s), json{{"train", c.fractions.train},
                                            {"val", c.fractions.val},
                                            {"test", c.fractions.test}});
}
std::string hash_train(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash(hash_split(c, s), model_stage_config(c));
}
std::string hash_compare(const ExperimentConfig& c, const ScaleSpec& s) {
  return chain_hash(hash_train(c, s), json{{"budgets", c.budgets},
                                           {"repeats", c.repeats},
                                           {"samples", c.sample.sample_count}});
}

bool all_exist(const fs::path& dir, const std::vector<std::string>& ids,
               const std::string& suffix) {
  for (const auto& id : ids) {
    if (!fs::exists(dir / (id + suffix))) return false;
  }
  return true;
}

Instance load_instance_file(const fs::path& path) {
  return decode_instance(read_text_file(path));
}

ParetoSet load_front_file(const fs::path& path) {
  return decode_pareto(read_text_file(path));
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

bool stage_gen(const ExperimentConfig& config, bool force) {
  config.validate();
  bool ran = false;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const auto ids = instance_ids(config, scale, si);
    const fs::path dir = paths::instance_dir(config, scale);
    ran |= ensure_stage(
        config, "gen:" + scale.tag(), hash_gen(config, scale), force,
        [&] { return all_exist(dir, ids, ".json"); },
        [&] {
          parallel_for(ids.size(), config.workers, [&](std::size_t k) {
            GenConfig gc = config.gen;
            gc.m = scale.m;
            gc.n = scale.n;
            gc.seed = instance_seed(config, si, static_cast<int>(k));
            const Instance inst = generate_instance(gc);
            write_text_file(dir / (inst.id + ".json"), encode_instance(inst));
          });
        });
  }
  return ran;
}

bool stage_solve(const ExperimentConfig& config, bool force) {
  bool ran = false;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const auto ids = instance_ids(config, scale, si);
    const fs::path in_dir = paths::instance_dir(config, scale);
    const fs::path out_dir = paths::front_dir(config, scale);
    ran |= ensure_stage(
        config, "solve:" + scale.tag(), hash_solve(config, scale), force,
        [&] { return all_exist(out_dir, ids, ".front.json"); },
        [&] {
          if (!all_exist(in_dir, ids, ".json")) {
            throw DomainError("solve requires generated instances under " + in_dir.string());
          }
          parallel_for(ids.size(), config.workers, [&](std::size_t k) {
            const Instance inst = load_instance_file(in_dir / (ids[k] + ".json"));
            MoeaParams params = config.moea;
            params.stop_on_convergence = true;
            params.checkpoint_budgets.clear();
            params.seed = derive_seed(config.seed, {seed_stream::solve, si, k});
            const Nsga2Result result = nsga2_run(inst, params);
            write_text_file(out_dir / (ids[k] + ".front.json"),
                            encode_pareto(result.final_front));
          });
        });
  }
  return ran;
}

bool stage_labels(const ExperimentConfig& config, bool force) {
  bool ran = false;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const auto ids = instance_ids(config, scale, si);
    const fs::path front_dir = paths::front_dir(config, scale);
    const fs::path out_dir = paths::dataset_dir(config, scale);
    ran |= ensure_stage(
        config, "labels:" + scale.tag(), hash_labels(config, scale), force,
        [&] { return all_exist(out_dir, ids, ".labels.json"); },
        [&] {
          if (!all_exist(front_dir, ids, ".front.json")) {
            throw DomainError("labels require solved fronts under " + front_dir.string());
          }
          parallel_for(ids.size(), config.workers, [&](std::size_t k) {
            const ParetoSet front = load_front_file(front_dir / (ids[k] + ".front.json"));
            const LabelPair labels = derive_labels(front, scale.m, scale.n);
            write_text_file(out_dir / (ids[k] + ".labels.json"),
                            encode_labels(labels, ids[k]));
          });
        });
  }
  return ran;
}

bool stage_split(const ExperimentConfig& config, bool force) {
  bool ran = false;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const auto ids = instance_ids(config, scale, si);
    const fs::path inst_dir = paths::instance_dir(config, scale);
    const fs::path front_dir = paths::front_dir(config, scale);
    const fs::path out_dir = paths::dataset_dir(config, scale);
    ran |= ensure_stage(
        config, "split:" + scale.tag(), hash_split(config, scale), force,
        [&] {
          return fs::exists(out_dir / "manifest.json") &&
                 all_exist(out_dir, ids, ".instance.json") &&
                 all_exist(out_dir, ids, ".front.json");
        },
        [&] {
          std::vector<std::pair<Instance, ParetoSet>> pairs;
          pairs.reserve(ids.size());
          for (const auto& id : ids) {
            pairs.emplace_back(load_instance_file(inst_dir / (id + ".json")),
                               load_front_file(front_dir / (id + ".front.json")));
          }
          const std::uint64_t split_seed =
              derive_seed(config.seed, {seed_stream::dataset, si});
          auto [train, val, test] = build_dataset(std::move(pairs), config.fractions,
                                                  split_seed);
          auto id_list = [](const Dataset& ds) {
            json arr = json::array();
            for (const auto& e : ds.entries) arr.push_back(e.instance.id);
            return arr;
          };
          json manifest;
          manifest["schema"] = 1;
          manifest["kind"] = "dataset";
          manifest["scale"] = {{"m", scale.m}, {"n", scale.n}};
          manifest["seed"] = split_seed;
          manifest["splits"] = {{"train", id_list(train)},
                                {"val", id_list(val)},
                                {"test", id_list(test)}};
          // The dataset directory is self-contained: instance + front + label
          // per entry beside the manifest.
          for (const auto& ds : {&train, &val, &test}) {
            for (const auto& e : ds->entries) {
              write_text_file(out_dir / (e.instance.id + ".instance.json"),
                              encode_instance(e.instance));
              write_text_file(out_dir / (e.instance.id + ".front.json"),
                              encode_pareto(e.front));
            }
          }
          write_text_file(out_dir / "manifest.json", manifest.dump(1) + "\n");
        });
  }
  return ran;
}

Dataset load_split(const ExperimentConfig& config, const ScaleSpec& scale,
                   const std::string& split) {
  const fs::path dir = paths::dataset_dir(config, scale);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw DomainError("dataset manifest not found at " + manifest_path.string() +
                      "; run the split stage first");
  }
  const json manifest = json::parse(read_text_file(manifest_path));
  const auto& splits = manifest.at("splits");
  if (!splits.contains(split)) throw DomainError("unknown split '" + split + "'");

  Dataset ds;
  ds.split = split;
  ds.m = manifest.at("scale").at("m").get<int>();
  ds.n = manifest.at("scale").at("n").get<int>();
  for (const auto& id_json : splits.at(split)) {
    const std::string id = id_json.get<std::string>();
    DatasetEntry entry;
    entry.instance = load_instance_file(dir / (id + ".instance.json"));
    entry.front = load_front_file(dir / (id + ".front.json"));
    auto [labels, label_id] = decode_labels(read_text_file(dir / (id + ".labels.json")));
    if (label_id != id) throw ValidationError("label file id mismatch for '" + id + "'");
    entry.labels = std::move(labels);
    entry.features_a = extract_features(entry.instance, FeatureVariant::A);
    entry.features_b = extract_features(entry.instance, FeatureVariant::B);
    ds.entries.push_back(std::move(entry));
  }
  return ds;
}

bool stage_train(const ExperimentConfig& config, bool force) {
  bool ran = false;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const fs::path dir = paths::model_dir(config, scale);
    ran |= ensure_stage(
        config, "train:" + scale.tag() + ":" + to_string(config.model.variant),
        hash_train(config, scale), force,
        [&] {
          return fs::exists(dir / "node.ckpt.json") && fs::exists(dir / "edge.ckpt.json") &&
                 fs::exists(dir / "history.csv");
        },
        [&] {
          const Dataset train = load_split(config, scale, "train");
          const Dataset val = load_split(config, scale, "val");
          ModelConfig mc = config.model;
          mc.seed = derive_seed(config.seed, {seed_stream::train, si});
          const TrainResult result = train_networks(train, val, mc, config.hyper);
          write_text_file(dir / "node.ckpt.json", save_checkpoint(result.node_net));
          write_text_file(dir / "edge.ckpt.json", save_checkpoint(result.edge_net));
          write_text_file(dir / "history.csv", history_csv(result.history));
        });
  }
  return ran;
}

// ---------------------------------------------------------------------------
// Compare
// ---------------------------------------------------------------------------

namespace {

struct InstanceComparison {
  std::string id;
  double model_hv = 0.0, model_igd = 0.0, model_ms = 0.0;
  double random_hv = 0.0, random_igd = 0.0, random_ms = 0.0;
  // [repeat][budget_index]
  std::vector<std::vector<double>> nsga_hv, nsga_igd;
  std::vector<double> nsga_ms;  // per repeat
  ParetoSet model_front;
  ParetoSet nsga_front;  // largest budget, first repeat
  std::vector<MinPoint> truth_norm;
  NormalizationFrame frame;
};

double wall_ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::pair<double, double> indicators(const ParetoSet& front, const NormalizationFrame& frame,
                                     const std::vector<MinPoint>& truth_norm) {
  std::vector<MinPoint> pts;
  pts.reserve(front.solutions.size());
  for (const auto& p : front.objective_points()) pts.push_back(frame.normalize(to_min_space(p)));
  return {hypervolume_2d(pts, frame.reference_point), igd(truth_norm, pts)};
}

}  // namespace

namespace {

void run_compare_for_scale(const ExperimentConfig& config, std::size_t si,
                           const ScaleSpec& scale) {
    const fs::path model_dir = paths::model_dir(config, scale);
    const fs::path node_path = model_dir / "node.ckpt.json";
    const fs::path edge_path = model_dir / "edge.ckpt.json";
    for (const auto& p : {node_path, edge_path}) {
      if (!fs::exists(p)) {
        throw DomainError("missing checkpoint " + p.string() +
                          "; run the train stage for scale " + scale.tag() + " first");
      }
    }
    const fs::path out_dir = paths::compare_dir(config, scale);

    const GcnNetwork node_net = load_checkpoint(read_text_file(node_path));
    const GcnNetwork edge_net = load_checkpoint(read_text_file(edge_path));
    const Dataset test = load_split(config, scale, "test");
    if (test.entries.empty()) throw DomainError("test split is empty");
    const std::string method = "dual_" + to_string(config.model.variant);

    std::vector<InstanceComparison> results(test.entries.size());
    parallel_for(test.entries.size(), config.workers, [&](std::size_t i) {
      const DatasetEntry& entry = test.entries[i];
      InstanceComparison& out = results[i];
      out.id = entry.instance.id;
      out.frame = make_frame(entry.front.objective_points());
      for (const auto& p : entry.front.objective_points())
        out.truth_norm.push_back(out.frame.normalize(to_min_space(p)));

      {
        const auto t0 = std::chrono::steady_clock::now();
        const Prediction pred = predict(entry.instance, node_net, edge_net);
        SampleConfig sc = config.sample;
        sc.seed = derive_seed(config.seed, {seed_stream::sample, si, i});
        out.model_front = nondominated_filter(co_sample(pred, entry.instance, sc));
        out.model_ms = wall_ms_since(t0);
        std::tie(out.model_hv, out.model_igd) =
            indicators(out.model_front, out.frame, out.truth_norm);
      }
      {
        const auto t0 = std::chrono::steady_clock::now();
        const auto pool = random_solutions(
            entry.instance, config.sample.sample_count,
            derive_seed(config.seed, {seed_stream::random_baseline, si, i}));
        const ParetoSet front = nondominated_filter(pool);
        out.random_ms = wall_ms_since(t0);
        std::tie(out.random_hv, out.random_igd) = indicators(front, out.frame, out.truth_norm);
      }
      out.nsga_hv.assign(config.repeats, std::vector<double>(config.budgets.size(), 0.0));
      out.nsga_igd.assign(config.repeats, std::vector<double>(config.budgets.size(), 0.0));
      out.nsga_ms.assign(config.repeats, 0.0);
      for (int r = 0; r < config.repeats; ++r) {
        MoeaParams params = config.moea;
        params.stop_on_convergence = false;
        params.checkpoint_budgets = config.budgets;
        params.max_evaluations = *std::max_element(config.budgets.begin(), config.budgets.end());
        params.seed = derive_seed(config.seed, {seed_stream::compare, si, i,
                                                static_cast<std::uint64_t>(r)});
        const auto t0 = std::chrono::steady_clock::now();
        const Nsga2Result res = nsga2_run(entry.instance, params);
        out.nsga_ms[r] = wall_ms_since(t0);
        for (std::size_t b = 0; b < config.budgets.size(); ++b) {
          const auto& front = res.checkpoints.at(config.budgets[b]);
          std::tie(out.nsga_hv[r][b], out.nsga_igd[r][b]) =
              indicators(front, out.frame, out.truth_norm);
        }
        if (r == 0) out.nsga_front = res.checkpoints.at(config.budgets.back());
      }
    });

    // Per-instance metrics (deterministic) and wall times (separate file, so
    // reruns of the same configuration produce byte-identical metrics).
    CsvWriter metrics({"instance_id", "method", "budget", "repeat", "hv", "igd",
                       "evaluation_count"});
    CsvWriter timings({"instance_id", "method", "repeat", "wall_time_ms"});
    for (const auto& r : results) {
      metrics.begin_row().col(r.id).col(method).col(0L).col(0).col(r.model_hv)
          .col(r.model_igd).col(static_cast<long>(config.sample.sample_count));
      metrics.begin_row().col(r.id).col(std::string("random")).col(0L).col(0)
          .col(r.random_hv).col(r.random_igd)
          .col(static_cast<long>(config.sample.sample_count));
      for (std::size_t b = 0; b < config.budgets.size(); ++b) {
        for (int rep = 0; rep < config.repeats; ++rep) {
          metrics.begin_row().col(r.id).col(std::string("nsga2")).col(config.budgets[b])
              .col(rep).col(r.nsga_hv[rep][b]).col(r.nsga_igd[rep][b]).col(config.budgets[b]);
        }
      }
      timings.begin_row().col(r.id).col(method).col(0).col(r.model_ms);
      timings.begin_row().col(r.id).col(std::string("random")).col(0).col(r.random_ms);
      for (int rep = 0; rep < config.repeats; ++rep) {
        timings.begin_row().col(r.id).col(std::string("nsga2")).col(rep).col(r.nsga_ms[rep]);
      }
    }
    write_text_file(out_dir / "metrics.csv", metrics.str());
    write_text_file(out_dir / "timings.csv", timings.str());

    // Win percentages against the NSGA-II repeat mean, per budget.
    WinRow hv_row{scale.tag(), to_string(config.model.variant), "hv", {}, 0.0};
    WinRow igd_row{scale.tag(), to_string(config.model.variant), "igd", {}, 0.0};
    const double t_count = static_cast<double>(results.size());
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      int hv_wins = 0, igd_wins = 0;
      for (const auto& r : results) {
        double mean_hv = 0.0, mean_igd = 0.0;
        for (int rep = 0; rep < config.repeats; ++rep) {
          mean_hv += r.nsga_hv[rep][b];
          mean_igd += r.nsga_igd[rep][b];
        }
        mean_hv /= config.repeats;
        mean_igd /= config.repeats;
        if (r.model_hv > mean_hv) ++hv_wins;
        if (r.model_igd < mean_igd) ++igd_wins;
      }
      hv_row.win_pct.push_back(100.0 * hv_wins / t_count);
      igd_row.win_pct.push_back(100.0 * igd_wins / t_count);
    }
    {
      int hv_wins = 0, igd_wins = 0;
      for (const auto& r : results) {
        if (r.model_hv > r.random_hv) ++hv_wins;
        if (r.model_igd < r.random_igd) ++igd_wins;
      }
      hv_row.win_pct_vs_random = 100.0 * hv_wins / t_count;
      igd_row.win_pct_vs_random = 100.0 * igd_wins / t_count;
    }
    std::vector<std::string> win_header{"scale", "variant", "indicator"};
    for (long b : config.budgets) win_header.push_back("mfe_" + std::to_string(b));
    win_header.push_back("vs_random");
    CsvWriter wins(win_header);
    for (const WinRow* row : {&hv_row, &igd_row}) {
      wins.begin_row().col(row->scale).col(row->variant).col(row->indicator);
      for (double pct : row->win_pct) wins.col(pct);
      wins.col(row->win_pct_vs_random);
    }
    write_text_file(out_dir / "wins.csv", wins.str());

    // Hypervolume differences (model minus NSGA-II mean) per budget.
    CsvWriter diff({"instance_id", "budget", "hv_diff"});
    SvgPlot diff_plot("Hypervolume difference vs NSGA-II (" + scale.tag() + ")",
                      "function evaluations", "HV(model) - HV(NSGA-II)");
    std::vector<SvgPlot::Point> mean_series;
    std::vector<SvgPlot::Point> scatter;
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      double mean_diff = 0.0;
      for (const auto& r : results) {
        double mean_hv = 0.0;
        for (int rep = 0; rep < config.repeats; ++rep) mean_hv += r.nsga_hv[rep][b];
        mean_hv /= config.repeats;
        const double d = r.model_hv - mean_hv;
        diff.begin_row().col(r.id).col(config.budgets[b]).col(d);
        scatter.push_back({static_cast<double>(config.budgets[b]), d});
        mean_diff += d;
      }
      mean_series.push_back({static_cast<double>(config.budgets[b]),
                             mean_diff / t_count});
    }
    write_text_file(out_dir / "hv_diff.csv", diff.str());
    diff_plot.add_scatter(std::move(scatter), "#7f7f7f", "per instance");
    diff_plot.add_line(std::move(mean_series), "#d62728", "mean");
    diff_plot.add_line({{static_cast<double>(config.budgets.front()), 0.0},
                        {static_cast<double>(config.budgets.back()), 0.0}},
                       "#000000", "");
    write_text_file(out_dir / "hv_diff.svg", diff_plot.render());

    // Front overlays for the first few test instances.
    const int svg_count = std::min<int>(config.front_svg_count,
                                        static_cast<int>(results.size()));
    for (int k = 0; k < svg_count; ++k) {
      const auto& r = results[k];
      SvgPlot plot("Normalized fronts, instance " + r.id, "total cost (normalized)",
                   "-reliability (normalized)");
      auto to_points = [&](const ParetoSet& ps) {
        std::vector<SvgPlot::Point> pts;
        for (const auto& p : ps.objective_points()) {
          const MinPoint q = r.frame.normalize(to_min_space(p));
          pts.push_back({q.x, q.y});
        }
        return pts;
      };
      std::vector<SvgPlot::Point> truth;
      for (const auto& q : r.truth_norm) truth.push_back({q.x, q.y});
      plot.add_step_front(std::move(truth), "#1f77b4", "ground truth");
      plot.add_scatter(to_points(r.model_front), "#d62728", method);
      plot.add_scatter(to_points(r.nsga_front), "#2ca02c",
                       "nsga2@" + std::to_string(config.budgets.back()));
      write_text_file(out_dir / ("front_" + r.id + ".svg"), plot.render());
    }
}

/// Reads the comparison artifacts back into a report, so cached and fresh
/// invocations return the same structure and every summary number stays
/// derivable from the per-instance CSV.
void load_compare_report(const ExperimentConfig& config, const ScaleSpec& scale,
                         CompareReport& report) {
  const fs::path out_dir = paths::compare_dir(config, scale);
  std::istringstream metrics(read_text_file(out_dir / "metrics.csv"));
  std::string line;
  std::getline(metrics, line);  // header
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    CompareRow row;
    row.instance_id = cells.at(0);
    row.method = cells.at(1);
    row.budget = std::stol(cells.at(2));
    row.repeat = std::stoi(cells.at(3));
    row.hv = std::stod(cells.at(4));
    row.igd = std::stod(cells.at(5));
    row.evaluations = std::stol(cells.at(6));
    report.rows.push_back(std::move(row));
  }
  std::istringstream wins(read_text_file(out_dir / "wins.csv"));
  std::getline(wins, line);  // header
  while (std::getline(wins, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    WinRow row;
    row.scale = cells.at(0);
    row.variant = cells.at(1);
    row.indicator = cells.at(2);
    for (std::size_t k = 3; k + 1 < cells.size(); ++k)
      row.win_pct.push_back(std::stod(cells[k]));
    row.win_pct_vs_random = std::stod(cells.back());
    report.wins.push_back(std::move(row));
  }
}

}  // namespace

CompareReport cmd_compare(const ExperimentConfig& config, bool force) {
  config.validate();
  CompareReport report;
  report.budgets = config.budgets;
  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const fs::path out_dir = paths::compare_dir(config, scale);
    ensure_stage(
        config, "compare:" + scale.tag() + ":" + to_string(config.model.variant),
        hash_compare(config, scale), force,
        [&] {
          return fs::exists(out_dir / "metrics.csv") && fs::exists(out_dir / "wins.csv") &&
                 fs::exists(out_dir / "hv_diff.csv") && fs::exists(out_dir / "timings.csv");
        },
        [&] { run_compare_for_scale(config, si, scale); });
    load_compare_report(config, scale, report);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "l_gcn") return SweepAxis::l_gcn;
  if (s == "hidden") return SweepAxis::hidden;
  throw ConfigError("unknown sweep axis '" + s + "' (expected l_gcn or hidden)");
}

SweepReport cmd_sweep(const ExperimentConfig& config, SweepAxis axis, std::vector<int> values,
                      bool force) {
  config.validate();
  if (values.empty()) {
    values = axis == SweepAxis::l_gcn ? std::vector<int>{1, 2, 3, 4}
                                      : std::vector<int>{32, 64, 128};
  }
  const std::string axis_name = axis == SweepAxis::l_gcn ? "l_gcn" : "hidden";

  SweepReport report;
  report.axis = axis_name;
  report.values = values;

  for (std::size_t si = 0; si < config.scales.size(); ++si) {
    const ScaleSpec& scale = config.scales[si];
    const fs::path out_dir = paths::sweep_dir(config, scale, axis_name);
    const Dataset test = load_split(config, scale, "test");
    if (test.entries.empty()) throw DomainError("test split is empty");

    CsvWriter raw({"axis", "value", "instance_id", "hv", "igd"});
    CsvWriter summary({"axis", "value", "indicator", "min", "q1", "median", "q3", "max"});
    SvgPlot hv_plot("Sweep over " + axis_name + " (" + scale.tag() + ")", axis_name,
                    "hypervolume");
    SvgPlot igd_plot("Sweep over " + axis_name + " (" + scale.tag() + ")", axis_name, "IGD");
    const double box_width =
        values.size() > 1
            ? 0.3 * (values.back() - values.front()) / static_cast<double>(values.size() - 1)
            : 1.0;

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
      const int value = values[vi];
      ExperimentConfig variant_config = config;
      if (axis == SweepAxis::l_gcn) {
        variant_config.model.l_gcn = value;
      } else {
        variant_config.model.hidden = value;
      }
      variant_config.model.validate();  // divisibility guard per axis value

      const fs::path value_dir = out_dir / ("value_" + std::to_string(value));
      const std::string key = "sweep:" + scale.tag() + ":" + axis_name + ":" +
                              std::to_string(value);
      ensure_stage(
          config, key, chain_hash(hash_split(config, scale), model_stage_config(variant_config)),
          force,
          [&] {
            return fs::exists(value_dir / "node.ckpt.json") &&
                   fs::exists(value_dir / "edge.ckpt.json");
          },
          [&] {
            const Dataset train = load_split(config, scale, "train");
            const Dataset val = load_split(config, scale, "val");
            ModelConfig mc = variant_config.model;
            mc.seed = derive_seed(config.seed, {seed_stream::sweep, si, vi});
            const TrainResult result = train_networks(train, val, mc, config.hyper);
            write_text_file(value_dir / "node.ckpt.json", save_checkpoint(result.node_net));
            write_text_file(value_dir / "edge.ckpt.json", save_checkpoint(result.edge_net));
            write_text_file(value_dir / "history.csv", history_csv(result.history));
          });

      const GcnNetwork node_net =
          load_checkpoint(read_text_file(value_dir / "node.ckpt.json"));
      const GcnNetwork edge_net =
          load_checkpoint(read_text_file(value_dir / "edge.ckpt.json"));

      std::vector<double> hvs(test.entries.size());
      std::vector<double> igds(test.entries.size());
      parallel_for(test.entries.size(), config.workers, [&](std::size_t i) {
        const DatasetEntry& entry = test.entries[i];
        const NormalizationFrame frame = make_frame(entry.front.objective_points());
        std::vector<MinPoint> truth_norm;
        for (const auto& p : entry.front.objective_points())
          truth_norm.push_back(frame.normalize(to_min_space(p)));
        const Prediction pred = predict(entry.instance, node_net, edge_net);
        SampleConfig sc = config.sample;
        sc.seed = derive_seed(config.seed, {seed_stream::sample, si, i, vi});
        const ParetoSet front = nondominated_filter(co_sample(pred, entry.instance, sc));
        std::tie(hvs[i], igds[i]) = indicators(front, frame, truth_norm);
      });

      for (std::size_t i = 0; i < test.entries.size(); ++i) {
        raw.begin_row().col(axis_name).col(value).col(test.entries[i].instance.id)
            .col(hvs[i]).col(igds[i]);
        report.rows.emplace_back(value, test.entries[i].instance.id, hvs[i], igds[i]);
      }
      const BoxStats hv_stats = box_stats(hvs);
      const BoxStats igd_stats = box_stats(igds);
      summary.begin_row().col(axis_name).col(value).col(std::string("hv"))
          .col(hv_stats.min).col(hv_stats.q1).col(hv_stats.median).col(hv_stats.q3)
          .col(hv_stats.max);
      summary.begin_row().col(axis_name).col(value).col(std::string("igd"))
          .col(igd_stats.min).col(igd_stats.q1).col(igd_stats.median).col(igd_stats.q3)
          .col(igd_stats.max);
      hv_plot.add_box(value, box_width, hv_stats, "#1f77b4",
                      vi == 0 ? "per-value distribution" : "");
      igd_plot.add_box(value, box_width, igd_stats, "#d62728",
                       vi == 0 ? "per-value distribution" : "");
    }
    write_text_file(out_dir / "sweep.csv", raw.str());
    write_text_file(out_dir / "sweep_summary.csv", summary.str());
    write_text_file(out_dir / "sweep_hv.svg", hv_plot.render());
    write_text_file(out_dir / "sweep_igd.svg", igd_plot.render());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pipeline and file-level commands
// ---------------------------------------------------------------------------

CompareReport cmd_pipeline(const ExperimentConfig& config, bool force) {
  config.validate();
  stage_gen(config, force);
  stage_solve(config, force);
  stage_labels(config, force);
  stage_split(config, force);
  stage_train(config, force);
  return cmd_compare(config, force);
}

void cmd_predict_file(const ExperimentConfig& config, const fs::path& instance_path,
                      const fs::path& out_path) {
  const Instance inst = load_instance_file(instance_path);
  const ScaleSpec scale{inst.m, inst.n};
  const fs::path model_dir = paths::model_dir(config, scale);
  const fs::path node_path = model_dir / "node.ckpt.json";
  const fs::path edge_path = model_dir / "edge.ckpt.json";
  for (const auto& p : {node_path, edge_path}) {
    if (!fs::exists(p)) {
      throw DomainError("missing checkpoint " + p.string() +
                        "; train a model for scale " + scale.tag() + " first");
    }
  }
  const GcnNetwork node_net = load_checkpoint(read_text_file(node_path));
  const GcnNetwork edge_net = load_checkpoint(read_text_file(edge_path));
  const Prediction pred = predict(inst, node_net, edge_net);
  SampleConfig sc = config.sample;
  sc.seed = derive_seed(config.seed, {seed_stream::sample, fnv1a(inst.id)});
  const ParetoSet front = nondominated_filter(co_sample(pred, inst, sc));
  write_text_file(out_path, encode_pareto(front));
}

std::pair<double, double> cmd_eval_files(const fs::path& front_path,
                                         const fs::path& reference_path) {
  const ParetoSet front = load_front_file(front_path);
  const ParetoSet reference = load_front_file(reference_path);
  const NormalizationFrame frame = make_frame(reference.objective_points());
  std::vector<MinPoint> truth_norm;
  for (const auto& p : reference.objective_points())
    truth_norm.push_back(frame.normalize(to_min_space(p)));
  return indicators(front, frame, truth_norm);
}

}  // namespace moflp
