// Experiment driver: data generation, SCT splitting, training, evaluation,
// the four-loss comparison, and the outlier robustness sweep. All commands
// are reproducible from the config file and seeds alone.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mcnl/experiment.hpp"
#include "mcnl/io_util.hpp"
#include "mcnl/manifest.hpp"

namespace fs = std::filesystem;
using namespace mcnl;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data_dir;
  bool desk = false;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_data) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (JSON)");
  cmd->add_option("--seed", opts.seed, "Override the seed(s) with a single value");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_flag("--desk", opts.desk, "Apply the desk-scale schedule (60 epochs, t0=30, t1=60)");
  if (with_data)
    cmd->add_option("--data", opts.data_dir, "Manifest directory (default: <out dir>/data)");
}

// Output dir precedence: --out flag, then MCNL_OUTPUT_DIR, then config.
std::string resolve_out(const ExperimentConfig& cfg, const CommonOpts& opts) {
  if (!opts.out.empty()) return opts.out;
  if (const char* env = std::getenv("MCNL_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

ExperimentConfig make_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = ExperimentConfig::load_file(opts.config_path);
  if (opts.desk) cfg.apply_desk_preset();
  if (opts.seed) {
    cfg.seeds = {*opts.seed};
    cfg.synth.seed = *opts.seed;
  }
  if (opts.jobs) cfg.jobs = *opts.jobs;
  return cfg;
}

std::string resolve_data_dir(const CommonOpts& opts, const std::string& out_dir) {
  if (!opts.data_dir.empty()) return opts.data_dir;
  return (fs::path(out_dir) / "data").string();
}

std::vector<double> parse_fraction_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0;
    if (!parse_double(item, v)) throw CLI::ValidationError("--fractions", "bad number: " + item);
    out.push_back(v);
  }
  return out;
}

std::vector<int> parse_count_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    if (!parse_nonneg_int(item, v)) throw CLI::ValidationError("--counts", "bad count: " + item);
    out.push_back(v);
  }
  return out;
}

void print_summary_table(const CompareResult& result) {
  std::cout << std::left << std::setw(15) << "loss" << std::right << std::setw(12) << "mean_rank1"
            << std::setw(10) << "min" << std::setw(10) << "max" << std::setw(10) << "mAP"
            << std::setw(12) << "pseudo_f" << std::setw(10) << "xcam" << '\n';
  for (const auto& row : result.summary) {
    std::cout << std::left << std::setw(15) << to_string(row.kind) << std::right << std::fixed
              << std::setprecision(4) << std::setw(12) << row.mean_rank1 << std::setw(10)
              << row.min_rank1 << std::setw(10) << row.max_rank1 << std::setw(10) << row.mean_map
              << std::setw(12) << std::setprecision(3) << row.mean_pseudo_f << std::setw(10)
              << row.mean_xcam << '\n';
  }
  std::cout.unsetf(std::ios::fixed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-camera-training metric learning lab"};
  app.require_subcommand(1);

  CommonOpts gen_opts, split_opts, train_opts, eval_opts, compare_opts, sweep_opts, export_opts;

  auto* gen = app.add_subcommand("gen", "Generate synthetic manifests (train/full/query/gallery)");
  add_common(gen, gen_opts, false);

  auto* split = app.add_subcommand("split-sct", "Reduce a manifest to one camera per identity");
  std::string split_in;
  add_common(split, split_opts, false);
  split->add_option("--in", split_in, "Input manifest")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one model and log metrics");
  std::string train_loss;
  add_common(train_cmd, train_opts, true);
  train_cmd->add_option("--loss", train_loss, "Loss kind override (mcnl, triplet, ...)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on query/gallery manifests");
  std::string eval_checkpoint;
  add_common(eval_cmd, eval_opts, true);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();

  auto* compare = app.add_subcommand("compare", "Run all four losses on identical data and seeds");
  add_common(compare, compare_opts, true);
  int compare_jobs = 0;
  compare->add_option("--jobs", compare_jobs, "Parallel workers (0 = hardware)");

  auto* sweep = app.add_subcommand("sweep-outliers", "Robustness sweep over outlier fractions");
  add_common(sweep, sweep_opts, true);
  std::string sweep_fractions = "0,0.02,0.05,0.1,0.14";
  std::string sweep_counts;
  std::string sweep_modes = "sct_relabel";
  int sweep_jobs = 0;
  sweep->add_option("--fractions", sweep_fractions, "Comma-separated outlier fractions");
  sweep->add_option("--counts", sweep_counts, "Comma-separated absolute outlier counts");
  sweep->add_option("--modes", sweep_modes, "Comma-separated modes (ground_truth,sct_relabel)");
  sweep->add_option("--jobs", sweep_jobs, "Parallel workers (0 = hardware)");

  auto* exportf = app.add_subcommand("export-features", "Embed a manifest and write feature CSV");
  std::string export_checkpoint, export_in;
  add_common(exportf, export_opts, false);
  exportf->add_option("--checkpoint", export_checkpoint, "Checkpoint file")->required();
  exportf->add_option("--in", export_in, "Input manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = make_config(gen_opts);
      const std::string out_dir = resolve_out(cfg, gen_opts);
      cmd_gen(cfg, (fs::path(out_dir) / "data").string());
      std::cout << "wrote manifests under " << (fs::path(out_dir) / "data").string() << '\n';
    } else if (split->parsed()) {
      const ExperimentConfig cfg = make_config(split_opts);
      const std::string out_dir = resolve_out(cfg, split_opts);
      const LoadedManifest loaded = load_manifest_full(split_in);
      const std::uint64_t seed = split_opts.seed.value_or(cfg.synth.seed);
      const Dataset split_set = sct_split(loaded.dataset, seed);
      const std::string out_path = (fs::path(out_dir) / "train_sct.csv").string();
      save_manifest(split_set, out_path, loaded.label_maps);
      std::cout << "wrote " << out_path << " (" << split_set.size() << " examples, CP = "
                << cp_value(split_set) << ")\n";
    } else if (train_cmd->parsed()) {
      ExperimentConfig cfg = make_config(train_opts);
      if (!train_loss.empty()) cfg.loss.kind = loss_kind_from_string(train_loss);
      const std::string out_dir = resolve_out(cfg, train_opts);
      const LoadedData data = load_data(resolve_data_dir(train_opts, out_dir));
      const std::uint64_t seed = cfg.seeds.front();
      const RunResult r = run_training(cfg, data, cfg.loss.kind, seed, out_dir);
      std::cout << "rank1 " << r.final_eval.report.rank1 << "  mAP " << r.final_eval.report.map
                << "  (files under " << out_dir << ")\n";
    } else if (eval_cmd->parsed()) {
      const ExperimentConfig cfg = make_config(eval_opts);
      const std::string out_dir = resolve_out(cfg, eval_opts);
      const LoadedData data = load_data(resolve_data_dir(eval_opts, out_dir));
      const Embedder e = load_checkpoint(eval_checkpoint);
      const EvalReport report =
          evaluate_model(e, data.query, data.gallery, cfg.eval.pseudo_f_sample, cfg.synth.seed);
      const std::string path = (fs::path(out_dir) / "report.json").string();
      write_file_atomic(path, eval_report_to_json(report) + "\n");
      std::cout << eval_report_to_json(report) << '\n';
    } else if (compare->parsed()) {
      ExperimentConfig cfg = make_config(compare_opts);
      if (compare_jobs > 0) cfg.jobs = compare_jobs;
      const std::string out_dir = resolve_out(cfg, compare_opts);
      const LoadedData data = load_data(resolve_data_dir(compare_opts, out_dir));
      const CompareResult result =
          cmd_compare(cfg, data, (fs::path(out_dir) / "compare").string());
      print_summary_table(result);
    } else if (sweep->parsed()) {
      ExperimentConfig cfg = make_config(sweep_opts);
      if (sweep_jobs > 0) cfg.jobs = sweep_jobs;
      const std::string out_dir = resolve_out(cfg, sweep_opts);
      const LoadedData data = load_data(resolve_data_dir(sweep_opts, out_dir), true);
      std::vector<OutlierMode> modes;
      std::stringstream ss(sweep_modes);
      std::string item;
      while (std::getline(ss, item, ',')) modes.push_back(outlier_mode_from_string(item));
      const auto points = cmd_sweep_outliers(
          cfg, data, parse_fraction_list(sweep_fractions),
          sweep_counts.empty() ? std::vector<int>{} : parse_count_list(sweep_counts), modes,
          (fs::path(out_dir) / "sweep").string());
      std::cout << "wrote " << points.size() << " sweep rows under "
                << (fs::path(out_dir) / "sweep").string() << '\n';
    } else if (exportf->parsed()) {
      const ExperimentConfig cfg = make_config(export_opts);
      const std::string out_dir = resolve_out(cfg, export_opts);
      const Embedder e = load_checkpoint(export_checkpoint);
      const Dataset d = load_manifest(export_in);
      const std::string path = (fs::path(out_dir) / "features.csv").string();
      export_features(e, d, path);
      std::cout << "wrote " << path << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
