#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcnl/errors.hpp"
#include "mcnl/matrix.hpp"

namespace mcnl {

enum class LossKind { mcnl, triplet, triplet_same, triplet_other };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::mcnl;
  double m1 = 0.1;              // hinge 1 margin (positive vs other-camera negative)
  double m2 = 0.1;              // hinge 2 margin (other-camera vs same-camera negative)
  double triplet_margin = 0.3;  // margin for the three triplet variants

  void validate() const;
};

// Per-anchor mined distances; NaN where the pair category does not exist in
// the batch (only allowed for categories the loss kind does not require).
struct LossDiagnostics {
  std::vector<double> dist_pos;    // farthest same-identity entry
  std::vector<double> dist_same;   // nearest different-identity entry, same camera
  std::vector<double> dist_other;  // nearest different-identity entry, other camera
  int active_hinge1 = 0;
  int active_hinge2 = 0;  // second hinge of the two-hinge loss; 0 for triplets
};

struct LossOutput {
  double value = 0.0;
  Matrix grad;  // d value / d emb, same shape as the embedding matrix
  LossDiagnostics diagnostics;
};

// Smoothed Euclidean distance matrix:
//   D[i][j] = sqrt(sum_d (emb[i][d] - emb[j][d])^2 + 1e-12) - sqrt(1e-12)
// Symmetric, zero diagonal, differentiable everywhere; coincident rows
// (with-replacement duplicates) get distance 0 and gradient 0.
Matrix pairwise_distances(const Matrix& emb);

// Batch-hard mined losses over the embedding matrix, summed over anchors.
//
// Per anchor a, with D the smoothed distance matrix:
//   dist_pos   = max D[a][j] over same-identity j != a
//   dist_same  = min D[a][j] over different-identity j in a's camera
//   dist_other = min D[a][j] over different-identity j in other cameras
//
//   mcnl          sum_a [m1 + dist_pos - dist_other]_+ + [m2 + dist_other - dist_same]_+
//   triplet       sum_a [margin + dist_pos - min over all different-identity entries]_+
//   triplet_same  sum_a [margin + dist_pos - dist_same]_+
//   triplet_other sum_a [margin + dist_pos - dist_other]_+
//
// The gradient is the exact subgradient: inactive hinges ([z]_+ with z <= 0)
// contribute nothing, and mining ties resolve to the lowest flat index.
// Throws DataError naming the first anchor that lacks a required pair type.
LossOutput compute_loss(const Matrix& emb, std::span<const int> ids, std::span<const int> cams,
                        const LossConfig& cfg);

}  // namespace mcnl
