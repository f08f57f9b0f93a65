// Command-line front end for the MO-FLP pipeline: instance generation,
// NSGA-II ground truth, label derivation, dataset splits, dual-GCN training,
// one-shot sampling and the NSGA-II comparison, plus hyperparameter sweeps.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moflp/errors.hpp"
#include "moflp/experiment.hpp"
#include "moflp/util.hpp"

namespace {

using namespace moflp;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string scale;
  std::string variant;
  std::vector<long> budgets;
  int samples = -1;
  long seed = -1;
  int workers = -1;
  bool force = false;
};

ExperimentConfig resolve_config(const CliOptions& opts) {
  ExperimentConfig config = opts.config_path.empty()
                                ? default_desk_config()
                                : config_from_json(read_text_file(opts.config_path));
  if (opts.seed >= 0) config.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (opts.workers >= 0) config.workers = opts.workers;
  if (!opts.scale.empty()) {
    const auto x = opts.scale.find('x');
    if (x == std::string::npos) throw ConfigError("--scale expects MxN, e.g. 10x25");
    config.scales = {{std::stoi(opts.scale.substr(0, x)),
                      std::stoi(opts.scale.substr(x + 1))}};
  }
  if (!opts.variant.empty()) config.model.variant = variant_from_string(opts.variant);
  if (!opts.budgets.empty()) config.budgets = opts.budgets;
  if (opts.samples > 0) config.sample.sample_count = opts.samples;
  config.validate();
  return config;
}

void print_stage(const char* name, bool ran) {
  std::printf("%-8s %s\n", name, ran ? "done" : "cached");
}

void print_wins(const CompareReport& report) {
  for (const auto& row : report.wins) {
    std::printf("%s dual_%s %-3s :", row.scale.c_str(), row.variant.c_str(),
                row.indicator.c_str());
    for (std::size_t b = 0; b < row.win_pct.size(); ++b) {
      std::printf(" mfe_%ld=%.0f%%", report.budgets[b], row.win_pct[b]);
    }
    std::printf(" vs_random=%.0f%%\n", row.win_pct_vs_random);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MO-FLP Pareto set prediction pipeline"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "Experiment config JSON");
  app.add_option("--seed", opts.seed, "Override the global seed");
  app.add_option("--out-dir", opts.out_dir, "Override the output directory");
  app.add_option("--scale", opts.scale, "Override the scale list with one MxN pair");
  app.add_option("--variant", opts.variant, "Feature variant A or B");
  app.add_option("--budget", opts.budgets, "Comparison budget list");
  app.add_option("--samples", opts.samples, "Solutions sampled per prediction");
  app.add_option("--workers", opts.workers, "Worker threads (0 = auto)");
  app.add_flag("--force", opts.force, "Rebuild stages whose cached config hash mismatches");

  auto* cmd_gen_sc = app.add_subcommand("gen", "Generate problem instances");
  auto* cmd_solve_sc = app.add_subcommand("solve", "Approximate ground-truth fronts (NSGA-II)");
  auto* cmd_label_sc = app.add_subcommand("label", "Derive probabilistic labels from fronts");
  auto* cmd_split_sc = app.add_subcommand("split", "Build the train/val/test dataset");
  auto* cmd_train_sc = app.add_subcommand("train", "Train the dual GCN model");
  auto* cmd_compare_sc = app.add_subcommand("compare", "Compare the model against NSGA-II");
  auto* cmd_pipeline_sc = app.add_subcommand("pipeline", "Run every stage end to end");

  auto* cmd_predict_sc = app.add_subcommand("predict", "Sample a front for one instance file");
  std::string predict_instance, predict_out;
  cmd_predict_sc->add_option("--instance", predict_instance, "Instance JSON path")->required();
  cmd_predict_sc->add_option("--out", predict_out, "Output front path (default: alongside)");

  auto* cmd_eval_sc = app.add_subcommand("eval", "HV/IGD of a front against a reference front");
  std::string eval_front, eval_reference;
  cmd_eval_sc->add_option("--front", eval_front, "Front JSON path")->required();
  cmd_eval_sc->add_option("--reference", eval_reference, "Reference front JSON path")
      ->required();

  auto* cmd_sweep_sc = app.add_subcommand("sweep", "Hyperparameter sensitivity sweep");
  std::string sweep_axis = "hidden";
  std::vector<int> sweep_values;
  cmd_sweep_sc->add_option("--axis", sweep_axis, "Sweep axis: l_gcn or hidden");
  cmd_sweep_sc->add_option("--values", sweep_values, "Axis values (defaults per axis)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_eval_sc->parsed()) {
      const auto [hv, igd_value] = cmd_eval_files(eval_front, eval_reference);
      std::printf("front,reference,hv,igd\n%s,%s,%s,%s\n", eval_front.c_str(),
                  eval_reference.c_str(), fmt_double(hv).c_str(),
                  fmt_double(igd_value).c_str());
      return 0;
    }

    const ExperimentConfig config = resolve_config(opts);

    if (cmd_gen_sc->parsed()) {
      print_stage("gen", stage_gen(config, opts.force));
    } else if (cmd_solve_sc->parsed()) {
      print_stage("solve", stage_solve(config, opts.force));
    } else if (cmd_label_sc->parsed()) {
      print_stage("label", stage_labels(config, opts.force));
    } else if (cmd_split_sc->parsed()) {
      print_stage("split", stage_split(config, opts.force));
    } else if (cmd_train_sc->parsed()) {
      print_stage("train", stage_train(config, opts.force));
    } else if (cmd_compare_sc->parsed()) {
      const CompareReport report = cmd_compare(config, opts.force);
      print_wins(report);
      std::printf("artifacts under %s\n", config.out_dir.c_str());
    } else if (cmd_pipeline_sc->parsed()) {
      print_stage("gen", stage_gen(config, opts.force));
      print_stage("solve", stage_solve(config, opts.force));
      print_stage("label", stage_labels(config, opts.force));
      print_stage("split", stage_split(config, opts.force));
      print_stage("train", stage_train(config, opts.force));
      const CompareReport report = cmd_compare(config, opts.force);
      print_wins(report);
      std::printf("artifacts under %s\n", config.out_dir.c_str());
    } else if (cmd_predict_sc->parsed()) {
      std::filesystem::path out = predict_out.empty()
                                      ? std::filesystem::path(predict_instance)
                                            .replace_extension(".sampled.front.json")
                                      : std::filesystem::path(predict_out);
      cmd_predict_file(config, predict_instance, out);
      std::printf("front written to %s\n", out.string().c_str());
    } else if (cmd_sweep_sc->parsed()) {
      const SweepReport report =
          cmd_sweep(config, sweep_axis_from_string(sweep_axis), sweep_values, opts.force);
      std::printf("sweep over %s done (%zu values); artifacts under %s\n",
                  report.axis.c_str(), report.values.size(), config.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
