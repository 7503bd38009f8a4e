#pragma once

#include <cstdint>
#include <vector>

#include "mcnl/dataset.hpp"
#include "mcnl/matrix.hpp"
#include "mcnl/rng.hpp"

namespace mcnl {

// C cameras x P identities per camera x K images per identity. All three must
// be >= 2: every anchor needs a positive, a same-camera negative and an
// other-camera negative for the two-hinge loss to be defined.
struct BatchSpec {
  int c = 8;
  int p = 4;
  int k = 8;

  int batch_size() const { return c * p * k; }
  void validate() const;
};

// Entry (ci, pi, ki) sits at flat index ci*p*k + pi*k + ki.
struct Batch {
  Matrix inputs;  // batch_size x d_in
  std::vector<int> ids;
  std::vector<int> cams;
  BatchSpec spec;
};

enum class SamplingMode {
  // Requires an SCT dataset; identity slots are whole identities.
  strict_sct,
  // Identity slots are (camera, identity) groups with true labels kept, which
  // extends the same draw procedure to datasets with cross-camera identities
  // (ground-truth-labeled outlier training sets). Identical to strict_sct on
  // SCT data.
  camera_groups,
};

// Draws C*P*K batches: cameras uniformly without replacement; identities per
// camera without replacement when the camera has >= p of them, otherwise all
// of them once plus uniform redraws; images per identity without replacement
// when the identity has >= k images under the camera, otherwise k uniform
// draws with replacement.
class BatchSampler {
 public:
  BatchSampler(const Dataset& d, BatchSpec spec, std::uint64_t seed,
               SamplingMode mode = SamplingMode::strict_sct);

  Batch next();

  // One epoch = ceil(|dataset| / (c*p*k)) independently drawn batches.
  std::size_t batches_per_epoch() const;

 private:
  struct Group {
    int identity;
    std::vector<std::size_t> example_indices;
  };

  const Dataset* data_;
  BatchSpec spec_;
  Rng rng_;
  std::vector<int> cameras_;                 // cameras with at least one identity
  std::vector<std::vector<Group>> groups_;   // parallel to cameras_
};

}  // namespace mcnl
