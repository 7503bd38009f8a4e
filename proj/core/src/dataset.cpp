#include "mcnl/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "mcnl/rng.hpp"

namespace mcnl {

Dataset::Dataset(std::vector<LabeledExample> examples, int n_cameras, int d_in)
    : examples_(std::move(examples)), n_cameras_(n_cameras), d_in_(d_in) {
  if (n_cameras_ < 0 || d_in_ < 0) throw DataError("negative camera count or input dimension");
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& ex = examples_[i];
    if (static_cast<int>(ex.input.size()) != d_in_)
      throw DataError("example " + std::to_string(i) + ": input has " +
                      std::to_string(ex.input.size()) + " entries, expected " +
                      std::to_string(d_in_));
    for (double v : ex.input)
      if (!std::isfinite(v))
        throw DataError("example " + std::to_string(i) + ": non-finite input entry");
    if (ex.identity < 0)
      throw DataError("example " + std::to_string(i) + ": negative identity label");
    if (ex.camera < 0 || ex.camera >= n_cameras_)
      throw DataError("example " + std::to_string(i) + ": camera " +
                      std::to_string(ex.camera) + " out of range [0, " +
                      std::to_string(n_cameras_) + ")");
    camera_sets_[ex.identity].insert(ex.camera);
    by_camera_[ex.camera][ex.identity].push_back(i);
    by_identity_[ex.identity].push_back(i);
  }
}

bool Dataset::is_sct() const {
  for (const auto& [id, cams] : camera_sets_)
    if (cams.size() != 1) return false;
  return true;
}

int Dataset::max_identity() const {
  return camera_sets_.empty() ? -1 : camera_sets_.rbegin()->first;
}

double cp_value(const Dataset& d) {
  if (d.n_identities() == 0) throw DataError("empty dataset");
  double total = 0.0;
  for (const auto& [id, cams] : d.camera_sets()) total += static_cast<double>(cams.size());
  return total / static_cast<double>(d.n_identities());
}

Dataset sct_split(const Dataset& d, std::uint64_t seed) {
  if (d.empty()) throw DataError("empty dataset");
  Rng rng(mix_seed(seed, 0x5c7));
  // One camera per identity, chosen uniformly from its camera set. Identities
  // are visited in ascending label order so the draw sequence is well-defined.
  std::map<int, int> chosen;
  for (const auto& [id, cams] : d.camera_sets()) {
    std::vector<int> sorted(cams.begin(), cams.end());
    chosen[id] = sorted[rng.uniform_below(sorted.size())];
  }
  std::vector<LabeledExample> kept;
  for (const auto& ex : d.examples())
    if (chosen.at(ex.identity) == ex.camera) kept.push_back(ex);
  return Dataset(std::move(kept), d.n_cameras(), d.d_in());
}

namespace {

Dataset inject_selected(const Dataset& sct, const Dataset& full, int count, OutlierMode mode,
                        std::uint64_t seed) {
  if (!sct.is_sct()) throw DataError("first dataset is not an SCT split (CP != 1)");
  if (sct.n_cameras() != full.n_cameras() || sct.d_in() != full.d_in())
    throw DataError("SCT and full datasets disagree on camera count or input dimension");
  if (count < 0 || count > sct.n_identities())
    throw ConfigError("outlier count " + std::to_string(count) + " outside [0, " +
                      std::to_string(sct.n_identities()) + "]");

  std::vector<int> ids;
  ids.reserve(sct.camera_sets().size());
  for (const auto& [id, cams] : sct.camera_sets()) {
    auto it = full.camera_sets().find(id);
    if (it == full.camera_sets().end())
      throw DataError("identity " + std::to_string(id) + " missing from full dataset");
    ids.push_back(id);
  }

  Rng rng(mix_seed(seed, 0x0417));
  std::set<int> selected;
  for (std::size_t idx : rng.sample_indices(ids.size(), static_cast<std::size_t>(count)))
    selected.insert(ids[idx]);

  std::vector<LabeledExample> out;
  for (const auto& ex : sct.examples())
    if (!selected.count(ex.identity)) out.push_back(ex);

  // Fresh labels for sct_relabel start above every label in either input.
  int next_label = std::max(sct.max_identity(), full.max_identity()) + 1;
  for (int id : selected) {
    if (mode == OutlierMode::ground_truth) {
      for (const auto& ex : full.examples())
        if (ex.identity == id) out.push_back(ex);
    } else {
      for (int cam : full.camera_sets().at(id)) {
        for (std::size_t i : full.by_camera().at(cam).at(id)) {
          LabeledExample ex = full.examples()[i];
          ex.identity = next_label;
          out.push_back(ex);
        }
        ++next_label;
      }
    }
  }
  return Dataset(std::move(out), full.n_cameras(), full.d_in());
}

}  // namespace

Dataset inject_outliers(const Dataset& sct, const Dataset& full, double fraction,
                        OutlierMode mode, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ConfigError("outlier fraction must be in [0, 1]");
  // round-half-up
  int count = static_cast<int>(std::floor(fraction * sct.n_identities() + 0.5));
  return inject_selected(sct, full, count, mode, seed);
}

Dataset inject_outliers_count(const Dataset& sct, const Dataset& full, int count,
                              OutlierMode mode, std::uint64_t seed) {
  return inject_selected(sct, full, count, mode, seed);
}

OutlierMode outlier_mode_from_string(const std::string& s) {
  if (s == "ground_truth") return OutlierMode::ground_truth;
  if (s == "sct_relabel") return OutlierMode::sct_relabel;
  throw ConfigError("unknown outlier mode '" + s + "' (expected ground_truth or sct_relabel)");
}

std::string to_string(OutlierMode mode) {
  return mode == OutlierMode::ground_truth ? "ground_truth" : "sct_relabel";
}

}  // namespace mcnl
