#ifndef MOFLP_EXPERIMENT_HPP
#define MOFLP_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moflp/dataset.hpp"
#include "moflp/gcn.hpp"
#include "moflp/instance_gen.hpp"
#include "moflp/nsga2.hpp"
#include "moflp/sampler.hpp"

namespace moflp {

struct ScaleSpec {
  int m = 0;
  int n = 0;

  std::string tag() const { return std::to_string(m) + "x" + std::to_string(n); }
};

/// Everything one end-to-end run needs: problem scales, data volume and
/// split, generator ranges, the NSGA-II settings used both for ground-truth
/// fronts and the comparison baseline, model and training settings, sampling
/// and reporting knobs. Per-instance and per-stage seeds are derived from the
/// single global seed.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 0;

  std::vector<ScaleSpec> scales{{10, 25}};
  int instances_per_scale = 130;
  SplitFractions fractions{0.7, 0.2, 0.1};

  GenConfig gen;      // m, n and seed are overridden per scale and instance
  MoeaParams moea;    // ground-truth/label runs; convergence stop is forced on
  std::vector<long> budgets{500, 1000, 2000, 4000};
  int repeats = 3;    // independent NSGA-II comparison runs per instance

  ModelConfig model;  // seed is derived from the global seed per scale
  TrainHyper hyper;
  SampleConfig sample;

  int front_svg_count = 3;

  void validate() const;
};

/// Defaults sized for a desk-scale run (one 10×25 scale, 130 instances).
ExperimentConfig default_desk_config();

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

/// Artifact locations under config.out_dir.
namespace paths {
std::filesystem::path manifest(const ExperimentConfig&);
std::filesystem::path instance_dir(const ExperimentConfig&, const ScaleSpec&);
std::filesystem::path front_dir(const ExperimentConfig&, const ScaleSpec&);
std::filesystem::path dataset_dir(const ExperimentConfig&, const ScaleSpec&);
std::filesystem::path model_dir(const ExperimentConfig&, const ScaleSpec&);
std::filesystem::path compare_dir(const ExperimentConfig&, const ScaleSpec&);
std::filesystem::path sweep_dir(const ExperimentConfig&, const ScaleSpec&,
                                const std::string& axis);
}  // namespace paths

/// Pipeline stages. Each is idempotent: a stage whose artifacts exist under a
/// matching config hash is skipped; a hash mismatch with existing artifacts
/// throws StaleCacheError unless force is set. Returns true when work ran.
bool stage_gen(const ExperimentConfig&, bool force);
bool stage_solve(const ExperimentConfig&, bool force);
bool stage_labels(const ExperimentConfig&, bool force);
bool stage_split(const ExperimentConfig&, bool force);
bool stage_train(const ExperimentConfig&, bool force);

/// Loads one split of the on-disk dataset (instances, fronts, labels;
/// features recomputed).
Dataset load_split(const ExperimentConfig&, const ScaleSpec&, const std::string& split);

/// One metrics row: hv/igd of a method's front on one instance at one budget
/// (budget 0 for the one-shot methods).
struct CompareRow {
  std::string instance_id;
  std::string method;  // "dual_A" | "dual_B" | "nsga2" | "random"
  long budget = 0;
  int repeat = 0;
  double hv = 0.0;
  double igd = 0.0;
  long evaluations = 0;
};

struct WinRow {
  std::string scale;
  std::string variant;
  std::string indicator;          // "hv" | "igd"
  std::vector<double> win_pct;    // one per budget, vs the NSGA-II repeat mean
  double win_pct_vs_random = 0.0;
};

struct CompareReport {
  std::vector<long> budgets;
  std::vector<CompareRow> rows;  // per-instance data, all methods
  std::vector<WinRow> wins;
};

/// Per test instance: samples the trained dual model, runs the NSGA-II
/// baseline at the configured checkpoint budgets (repeats independent runs)
/// and the uniform-random baseline, computes normalized HV/IGD in the
/// instance's ground-truth frame, and writes metrics.csv, timings.csv,
/// wins.csv, hv_diff.csv and SVG overlays. Requires gen/solve/dataset/train
/// artifacts; missing checkpoints raise an error naming the expected path.
CompareReport cmd_compare(const ExperimentConfig&, bool force);

enum class SweepAxis { l_gcn, hidden };
SweepAxis sweep_axis_from_string(const std::string&);

struct SweepReport {
  std::string axis;
  std::vector<int> values;
  // per (value, instance): indicators
  std::vector<std::tuple<int, std::string, double, double>> rows;  // value, id, hv, igd
};

/// Trains one model per axis value, evaluates sampled fronts on the test
/// split and writes per-value boxplot statistics (CSV + SVG).
SweepReport cmd_sweep(const ExperimentConfig&, SweepAxis axis, std::vector<int> values,
                      bool force);

/// gen -> solve -> labels -> split -> train -> compare, with cached stages
/// skipped. Writes a run manifest recording stage hashes and seeds.
CompareReport cmd_pipeline(const ExperimentConfig&, bool force);

/// Samples a stored prediction for one instance file using the trained
/// checkpoints of `scale`; writes the non-dominated front next to out_path.
void cmd_predict_file(const ExperimentConfig&, const std::filesystem::path& instance_path,
                      const std::filesystem::path& out_path);

/// HV and IGD of a front file against a reference front file (the reference
/// defines the normalization frame). Returns (hv, igd).
std::pair<double, double> cmd_eval_files(const std::filesystem::path& front_path,
                                         const std::filesystem::path& reference_path);

}  // namespace moflp

#endif  // MOFLP_EXPERIMENT_HPP
