#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mcnl/errors.hpp"

namespace mcnl {

// One sample: raw input vector plus identity and camera labels. Labels are
// non-negative integers; cameras index into [0, n_cameras) of the owning
// dataset, identities are keys of its identity registry.
struct LabeledExample {
  std::vector<double> input;
  int identity = 0;
  int camera = 0;

  friend bool operator==(const LabeledExample& a, const LabeledExample& b) {
    return a.identity == b.identity && a.camera == b.camera && a.input == b.input;
  }
};

// Immutable collection of examples with camera/identity index structures.
// The constructor validates every example and builds the registries; all
// accessors are const, so shared Dataset instances are safe to read
// concurrently.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<LabeledExample> examples, int n_cameras, int d_in);

  const std::vector<LabeledExample>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  int n_cameras() const { return n_cameras_; }
  int d_in() const { return d_in_; }
  int n_identities() const { return static_cast<int>(camera_sets_.size()); }

  // identity -> set of cameras it appears in
  const std::map<int, std::set<int>>& camera_sets() const { return camera_sets_; }
  // camera -> identity -> indices into examples()
  const std::map<int, std::map<int, std::vector<std::size_t>>>& by_camera() const {
    return by_camera_;
  }
  // identity -> indices into examples()
  const std::map<int, std::vector<std::size_t>>& by_identity() const { return by_identity_; }

  // True when every identity appears in exactly one camera (CP = 1).
  bool is_sct() const;
  int max_identity() const;

 private:
  std::vector<LabeledExample> examples_;
  int n_cameras_ = 0;
  int d_in_ = 0;
  std::map<int, std::set<int>> camera_sets_;
  std::map<int, std::map<int, std::vector<std::size_t>>> by_camera_;
  std::map<int, std::vector<std::size_t>> by_identity_;
};

// Mean over identities of the number of distinct cameras each appears in.
// Throws DataError on an empty dataset.
double cp_value(const Dataset& d);

// For each identity, keep only its examples under one uniformly chosen camera.
// The result satisfies the SCT invariant. Deterministic given seed.
Dataset sct_split(const Dataset& d, std::uint64_t seed);

enum class OutlierMode { ground_truth, sct_relabel };

OutlierMode outlier_mode_from_string(const std::string& s);
std::string to_string(OutlierMode mode);

// Restores round(fraction * n_identities) randomly chosen identities of `sct`
// to their full multi-camera example sets from `full`. ground_truth keeps the
// original identity label across cameras; sct_relabel assigns a fresh label
// per (identity, camera) pair, allocated above the current max label.
Dataset inject_outliers(const Dataset& sct, const Dataset& full, double fraction,
                        OutlierMode mode, std::uint64_t seed);

// Same with an absolute number of identities instead of a fraction.
Dataset inject_outliers_count(const Dataset& sct, const Dataset& full, int count,
                              OutlierMode mode, std::uint64_t seed);

}  // namespace mcnl
