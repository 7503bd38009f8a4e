#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcnl/dataset.hpp"
#include "mcnl/losses.hpp"
#include "mcnl/optim.hpp"
#include "mcnl/sampler.hpp"
#include "mcnl/synthgen.hpp"
#include "mcnl/trainer.hpp"

namespace mcnl {

struct EvalConfig {
  int eval_every = 10;      // 0: evaluate only at initialization and the final epoch
  int pseudo_f_sample = 0;  // 0: use all test features
};

// Full experiment description. The JSON schema mirrors the nested structs;
// every field is optional and defaults to the values below (paper-scale
// schedule). Unknown keys are rejected.
struct ExperimentConfig {
  SynthConfig synth;
  BatchSpec batch;
  LossConfig loss;
  OptimConfig optim;
  EmbedderConfig embedder;  // d_in follows synth.d_in unless set explicitly
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output_dir = "out";
  int jobs = 0;  // parallel workers for compare/sweep; 0 = hardware

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load_file(const std::string& path);
  std::string to_json_text() const;

  // Scaled-down schedule for fast desk runs: 60 epochs, t0 = 30, t1 = 60.
  void apply_desk_preset();
  void validate() const;
};

// Manifests written by `gen` and read back by the other commands.
struct DataPaths {
  std::string train, full_train, query, gallery;
  static DataPaths in_dir(const std::string& dir);
};

struct LoadedData {
  Dataset train;
  std::optional<Dataset> full_train;
  Dataset query;
  Dataset gallery;
};

// Generates the synthetic datasets and writes the four manifests plus a
// config snapshot under dir. Byte-identical across reruns of one config.
void cmd_gen(const ExperimentConfig& cfg, const std::string& dir);

// Loads train/query/gallery (and full_train when present) from dir.
LoadedData load_data(const std::string& dir, bool need_full = false);

struct RunResult {
  LossKind kind = LossKind::mcnl;
  std::uint64_t seed = 0;
  EvalSnapshot initial;
  EvalSnapshot final_eval;
  double final_mean_loss = 0.0;
  std::string run_dir;
};

// One training run; writes metrics.csv, checkpoint.json and report.json under
// out_dir and returns the evaluation summary. train_override substitutes the
// training set (outlier sweeps) while query/gallery stay fixed.
RunResult run_training(const ExperimentConfig& cfg, const LoadedData& data, LossKind kind,
                       std::uint64_t seed, const std::string& out_dir,
                       const Dataset* train_override = nullptr,
                       SamplingMode mode = SamplingMode::strict_sct);

struct CompareSummaryRow {
  LossKind kind;
  double mean_rank1, min_rank1, max_rank1;
  double mean_map, mean_pseudo_f, mean_xcam;
};

struct CompareResult {
  std::vector<RunResult> runs;             // all (kind, seed) runs
  std::vector<CompareSummaryRow> summary;  // one row per loss kind
};

// Runs all four loss kinds on identical data and seeds; writes
// compare_runs.csv and compare_summary.csv under out_dir.
CompareResult cmd_compare(const ExperimentConfig& cfg, const LoadedData& data,
                          const std::string& out_dir);

struct SweepPoint {
  double fraction;  // negative when an absolute count was given
  int count;
  OutlierMode mode;
  std::uint64_t seed;
  double cp;
  double rank1, map;
};

// Fig.-5-style robustness sweep: rebuilds the training set via
// inject_outliers for every (fraction, mode, seed), trains, evaluates, and
// writes sweep.csv. ground_truth points train with camera-group sampling
// because their training sets have CP > 1.
std::vector<SweepPoint> cmd_sweep_outliers(const ExperimentConfig& cfg, const LoadedData& data,
                                           const std::vector<double>& fractions,
                                           const std::vector<int>& counts,
                                           const std::vector<OutlierMode>& modes,
                                           const std::string& out_dir);

// Runs fn(0..n-1) on `jobs` worker threads (0 = hardware concurrency). The
// first exception, if any, is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mcnl
