#include "mcnl/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mcnl/io_util.hpp"
#include "mcnl/manifest.hpp"

namespace mcnl {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown config key '" + where + it.key() + "'");
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ExperimentConfig cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown_keys(
        j, {"synth", "batch", "loss", "optim", "embedder", "eval", "seeds", "output_dir", "jobs"},
        "");
    if (j.contains("synth")) {
      const json& s = j["synth"];
      reject_unknown_keys(s,
                          {"n_cameras", "ids_per_camera_train", "images_per_id", "n_test_ids",
                           "test_cams_per_id", "d_in", "d_id", "d_cam", "alpha_id", "alpha_cam",
                           "sigma", "seed"},
                          "synth.");
      get_if(s, "n_cameras", cfg.synth.n_cameras);
      get_if(s, "ids_per_camera_train", cfg.synth.ids_per_camera_train);
      get_if(s, "images_per_id", cfg.synth.images_per_id);
      get_if(s, "n_test_ids", cfg.synth.n_test_ids);
      get_if(s, "test_cams_per_id", cfg.synth.test_cams_per_id);
      get_if(s, "d_in", cfg.synth.d_in);
      get_if(s, "d_id", cfg.synth.d_id);
      get_if(s, "d_cam", cfg.synth.d_cam);
      get_if(s, "alpha_id", cfg.synth.alpha_id);
      get_if(s, "alpha_cam", cfg.synth.alpha_cam);
      get_if(s, "sigma", cfg.synth.sigma);
      get_if(s, "seed", cfg.synth.seed);
    }
    if (j.contains("batch")) {
      reject_unknown_keys(j["batch"], {"c", "p", "k"}, "batch.");
      get_if(j["batch"], "c", cfg.batch.c);
      get_if(j["batch"], "p", cfg.batch.p);
      get_if(j["batch"], "k", cfg.batch.k);
    }
    if (j.contains("loss")) {
      reject_unknown_keys(j["loss"], {"kind", "m1", "m2", "triplet_margin"}, "loss.");
      if (j["loss"].contains("kind"))
        cfg.loss.kind = loss_kind_from_string(j["loss"]["kind"].get<std::string>());
      get_if(j["loss"], "m1", cfg.loss.m1);
      get_if(j["loss"], "m2", cfg.loss.m2);
      get_if(j["loss"], "triplet_margin", cfg.loss.triplet_margin);
    }
    if (j.contains("optim")) {
      const json& o = j["optim"];
      reject_unknown_keys(
          o, {"lr0", "t0", "t1", "weight_decay", "beta1", "beta2", "eps_hat", "epochs"},
          "optim.");
      get_if(o, "lr0", cfg.optim.lr0);
      get_if(o, "t0", cfg.optim.t0);
      get_if(o, "t1", cfg.optim.t1);
      get_if(o, "weight_decay", cfg.optim.weight_decay);
      get_if(o, "beta1", cfg.optim.beta1);
      get_if(o, "beta2", cfg.optim.beta2);
      get_if(o, "eps_hat", cfg.optim.eps_hat);
      get_if(o, "epochs", cfg.optim.epochs);
    }
    cfg.embedder.d_in = cfg.synth.d_in;
    if (j.contains("embedder")) {
      reject_unknown_keys(j["embedder"], {"d_in", "hidden_dim", "hidden_layers", "d_emb"},
                          "embedder.");
      get_if(j["embedder"], "d_in", cfg.embedder.d_in);
      get_if(j["embedder"], "hidden_dim", cfg.embedder.hidden_dim);
      get_if(j["embedder"], "hidden_layers", cfg.embedder.hidden_layers);
      get_if(j["embedder"], "d_emb", cfg.embedder.d_emb);
    }
    if (j.contains("eval")) {
      reject_unknown_keys(j["eval"], {"eval_every", "pseudo_f_sample"}, "eval.");
      get_if(j["eval"], "eval_every", cfg.eval.eval_every);
      get_if(j["eval"], "pseudo_f_sample", cfg.eval.pseudo_f_sample);
    }
    get_if(j, "seeds", cfg.seeds);
    get_if(j, "output_dir", cfg.output_dir);
    get_if(j, "jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return from_json_text(text);
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["synth"] = {{"n_cameras", synth.n_cameras},
                {"ids_per_camera_train", synth.ids_per_camera_train},
                {"images_per_id", synth.images_per_id},
                {"n_test_ids", synth.n_test_ids},
                {"test_cams_per_id", synth.test_cams_per_id},
                {"d_in", synth.d_in},
                {"d_id", synth.d_id},
                {"d_cam", synth.d_cam},
                {"alpha_id", synth.alpha_id},
                {"alpha_cam", synth.alpha_cam},
                {"sigma", synth.sigma},
                {"seed", synth.seed}};
  j["batch"] = {{"c", batch.c}, {"p", batch.p}, {"k", batch.k}};
  j["loss"] = {{"kind", to_string(loss.kind)},
               {"m1", loss.m1},
               {"m2", loss.m2},
               {"triplet_margin", loss.triplet_margin}};
  j["optim"] = {{"lr0", optim.lr0},
                {"t0", optim.t0},
                {"t1", optim.t1},
                {"weight_decay", optim.weight_decay},
                {"beta1", optim.beta1},
                {"beta2", optim.beta2},
                {"eps_hat", optim.eps_hat},
                {"epochs", optim.epochs}};
  j["embedder"] = {{"d_in", embedder.d_in},
                   {"hidden_dim", embedder.hidden_dim},
                   {"hidden_layers", embedder.hidden_layers},
                   {"d_emb", embedder.d_emb}};
  j["eval"] = {{"eval_every", eval.eval_every}, {"pseudo_f_sample", eval.pseudo_f_sample}};
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  j["jobs"] = jobs;
  return j.dump(2) + "\n";
}

void ExperimentConfig::apply_desk_preset() {
  optim.epochs = 60;
  optim.t0 = 30;
  optim.t1 = 60;
}

void ExperimentConfig::validate() const {
  synth.validate();
  batch.validate();
  loss.validate();
  optim.validate();
  embedder.validate();
  if (eval.eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (eval.pseudo_f_sample < 0) throw ConfigError("pseudo_f_sample must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
}

DataPaths DataPaths::in_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  DataPaths p;
  p.train = (fs::path(dir) / "train.csv").string();
  p.full_train = (fs::path(dir) / "train_full.csv").string();
  p.query = (fs::path(dir) / "query.csv").string();
  p.gallery = (fs::path(dir) / "gallery.csv").string();
  return p;
}

void cmd_gen(const ExperimentConfig& cfg, const std::string& dir) {
  const SynthData data = generate(cfg.synth);
  const DataPaths paths = DataPaths::in_dir(dir);
  save_manifest(data.train, paths.train);
  save_manifest(data.full_train, paths.full_train);
  save_manifest(data.query, paths.query);
  save_manifest(data.gallery, paths.gallery);
  write_file_atomic((std::filesystem::path(dir) / "config.json").string(), cfg.to_json_text());
}

LoadedData load_data(const std::string& dir, bool need_full) {
  const DataPaths paths = DataPaths::in_dir(dir);
  LoadedData data;
  data.train = load_manifest(paths.train);
  data.query = load_manifest(paths.query);
  data.gallery = load_manifest(paths.gallery);
  if (std::filesystem::exists(paths.full_train))
    data.full_train = load_manifest(paths.full_train);
  else if (need_full)
    throw DataError("full training manifest '" + paths.full_train +
                    "' not found (required for outlier sweeps); run `gen` first");
  return data;
}

namespace {

std::string csv_cell(double v) { return std::isnan(v) ? "nan" : format_double(v); }

std::string metrics_csv(const TrainRun& run) {
  std::ostringstream out;
  out << "epoch,mean_loss,lr,rank1,map,pseudo_f,xcam_nn_prob,xcam_nn_prob_train\n";
  for (const auto& rec : run.records) {
    out << rec.epoch << ',' << format_double(rec.mean_loss) << ',' << format_double(rec.lr);
    if (rec.eval) {
      out << ',' << csv_cell(rec.eval->report.rank1) << ',' << csv_cell(rec.eval->report.map)
          << ',' << csv_cell(rec.eval->report.pseudo_f) << ','
          << csv_cell(rec.eval->report.xcam_nn_prob) << ','
          << csv_cell(rec.eval->xcam_nn_prob_train);
    } else {
      out << ",nan,nan,nan,nan,nan";
    }
    out << '\n';
  }
  return out.str();
}

json snapshot_json(const EvalSnapshot& s) {
  json j = json::parse(eval_report_to_json(s.report));
  j["xcam_nn_prob_train"] = s.xcam_nn_prob_train;
  return j;
}

}  // namespace

RunResult run_training(const ExperimentConfig& cfg, const LoadedData& data, LossKind kind,
                       std::uint64_t seed, const std::string& out_dir,
                       const Dataset* train_override, SamplingMode mode) {
  const Dataset& train_set = train_override ? *train_override : data.train;

  LossConfig loss = cfg.loss;
  loss.kind = kind;
  EmbedderConfig embedder = cfg.embedder;
  embedder.d_in = train_set.d_in();

  // Evaluation cadence: epoch 0 (initialization), every eval_every epochs
  // when > 0, and always the final epoch.
  const int every = cfg.eval.eval_every;
  const int last = cfg.optim.epochs;
  EvalHook hook = [&](int epoch, const Embedder& e) -> std::optional<EvalSnapshot> {
    const bool due = epoch == 0 || epoch == last || (every > 0 && epoch % every == 0);
    if (!due) return std::nullopt;
    EvalSnapshot snap;
    snap.report =
        evaluate_model(e, data.query, data.gallery, cfg.eval.pseudo_f_sample, cfg.synth.seed);
    snap.xcam_nn_prob_train =
        xcam_nn_prob(embed_dataset(e, train_set), dataset_meta(train_set));
    return snap;
  };

  const TrainRun run = train(train_set, cfg.batch, loss, cfg.optim, embedder, seed, hook, mode);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "metrics.csv").string(), metrics_csv(run));
  save_checkpoint(run.embedder, (fs::path(out_dir) / "checkpoint.json").string());

  RunResult result;
  result.kind = kind;
  result.seed = seed;
  result.run_dir = out_dir;
  result.initial = run.initial_eval.value();
  result.final_eval = result.initial;  // stays when zero epochs were run
  for (auto it = run.records.rbegin(); it != run.records.rend(); ++it)
    if (it->eval) {
      result.final_eval = *it->eval;
      break;
    }
  result.final_mean_loss = run.records.empty() ? 0.0 : run.records.back().mean_loss;

  json report;
  report["config"] = json::parse(cfg.to_json_text());
  report["config"]["loss"]["kind"] = to_string(kind);
  report["seed"] = seed;
  report["epochs_run"] = run.records.size();
  report["final_mean_loss"] = result.final_mean_loss;
  report["initial_eval"] = snapshot_json(result.initial);
  report["final_eval"] = snapshot_json(result.final_eval);
  write_file_atomic((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
  return result;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

CompareResult cmd_compare(const ExperimentConfig& cfg, const LoadedData& data,
                          const std::string& out_dir) {
  namespace fs = std::filesystem;
  const LossKind kinds[] = {LossKind::mcnl, LossKind::triplet, LossKind::triplet_same,
                            LossKind::triplet_other};
  struct Job {
    LossKind kind;
    std::uint64_t seed;
  };
  std::vector<Job> grid;
  for (LossKind kind : kinds)
    for (std::uint64_t seed : cfg.seeds) grid.push_back({kind, seed});

  CompareResult result;
  result.runs.resize(grid.size());
  parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
    const auto [kind, seed] = grid[i];
    const std::string dir =
        (fs::path(out_dir) / (to_string(kind) + "_seed" + std::to_string(seed))).string();
    result.runs[i] = run_training(cfg, data, kind, seed, dir);
  });

  std::ostringstream runs_csv;
  runs_csv << "loss,seed,rank1,map,pseudo_f,xcam_nn_prob\n";
  for (const auto& r : result.runs)
    runs_csv << to_string(r.kind) << ',' << r.seed << ',' << format_double(r.final_eval.report.rank1)
             << ',' << format_double(r.final_eval.report.map) << ','
             << csv_cell(r.final_eval.report.pseudo_f) << ','
             << format_double(r.final_eval.report.xcam_nn_prob) << '\n';
  write_file_atomic((fs::path(out_dir) / "compare_runs.csv").string(), runs_csv.str());

  std::ostringstream summary_csv;
  summary_csv << "loss,mean_rank1,min_rank1,max_rank1,mean_map,mean_pseudo_f,mean_xcam_nn_prob\n";
  for (LossKind kind : kinds) {
    CompareSummaryRow row{kind, 0, 1e300, -1e300, 0, 0, 0};
    int count = 0;
    for (const auto& r : result.runs) {
      if (r.kind != kind) continue;
      const auto& rep = r.final_eval.report;
      row.mean_rank1 += rep.rank1;
      row.min_rank1 = std::min(row.min_rank1, rep.rank1);
      row.max_rank1 = std::max(row.max_rank1, rep.rank1);
      row.mean_map += rep.map;
      row.mean_pseudo_f += rep.pseudo_f;
      row.mean_xcam += rep.xcam_nn_prob;
      ++count;
    }
    row.mean_rank1 /= count;
    row.mean_map /= count;
    row.mean_pseudo_f /= count;
    row.mean_xcam /= count;
    result.summary.push_back(row);
    summary_csv << to_string(kind) << ',' << format_double(row.mean_rank1) << ','
                << format_double(row.min_rank1) << ',' << format_double(row.max_rank1) << ','
                << format_double(row.mean_map) << ',' << csv_cell(row.mean_pseudo_f) << ','
                << format_double(row.mean_xcam) << '\n';
  }
  write_file_atomic((fs::path(out_dir) / "compare_summary.csv").string(), summary_csv.str());
  return result;
}

std::vector<SweepPoint> cmd_sweep_outliers(const ExperimentConfig& cfg, const LoadedData& data,
                                           const std::vector<double>& fractions,
                                           const std::vector<int>& counts,
                                           const std::vector<OutlierMode>& modes,
                                           const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!data.full_train)
    throw DataError("outlier sweep requires the full training manifest; run `gen` first");
  if (modes.empty()) throw ConfigError("outlier sweep needs at least one mode");
  if (fractions.empty() && counts.empty())
    throw ConfigError("outlier sweep needs fractions or counts");
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("outlier fraction must be in [0, 1]");

  struct Job {
    double fraction;  // < 0 when count-based
    int count;        // < 0 when fraction-based
    OutlierMode mode;
    std::uint64_t seed;
  };
  std::vector<Job> grid;
  for (OutlierMode mode : modes) {
    for (double f : fractions)
      for (std::uint64_t seed : cfg.seeds) grid.push_back({f, -1, mode, seed});
    for (int c : counts)
      for (std::uint64_t seed : cfg.seeds) grid.push_back({-1.0, c, mode, seed});
  }

  std::vector<SweepPoint> points(grid.size());
  parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
    const Job& job = grid[i];
    const std::uint64_t inject_seed =
        mix_seed(job.seed, 0x0457 + static_cast<std::uint64_t>(i));
    const Dataset train_set =
        job.count >= 0
            ? inject_outliers_count(data.train, *data.full_train, job.count, job.mode, inject_seed)
            : inject_outliers(data.train, *data.full_train, job.fraction, job.mode, inject_seed);

    // ground-truth outliers reintroduce cross-camera identities
    const SamplingMode mode = train_set.is_sct() ? SamplingMode::strict_sct
                                                 : SamplingMode::camera_groups;
    std::ostringstream tag;
    tag << to_string(cfg.loss.kind) << '_' << to_string(job.mode) << '_'
        << (job.count >= 0 ? "n" + std::to_string(job.count) : "f" + format_double(job.fraction))
        << "_seed" << job.seed;
    const RunResult run = run_training(cfg, data, cfg.loss.kind, job.seed,
                                       (fs::path(out_dir) / tag.str()).string(), &train_set, mode);

    SweepPoint pt;
    pt.fraction = job.fraction;
    pt.count = job.count >= 0
                   ? job.count
                   : static_cast<int>(std::floor(job.fraction * data.train.n_identities() + 0.5));
    pt.mode = job.mode;
    pt.seed = job.seed;
    pt.cp = cp_value(train_set);
    pt.rank1 = run.final_eval.report.rank1;
    pt.map = run.final_eval.report.map;
    points[i] = pt;
  });

  std::ostringstream csv;
  csv << "fraction,mode,seed,cp,rank1,map\n";
  for (const auto& pt : points) {
    csv << (pt.fraction >= 0 ? format_double(pt.fraction) : "count:" + std::to_string(pt.count))
        << ',' << to_string(pt.mode) << ',' << pt.seed << ',' << format_double(pt.cp) << ','
        << format_double(pt.rank1) << ',' << format_double(pt.map) << '\n';
  }
  write_file_atomic((fs::path(out_dir) / "sweep.csv").string(), csv.str());
  return points;
}

}  // namespace mcnl
