#include "mcnl/losses.hpp"

#include <cmath>
#include <limits>

namespace mcnl {

namespace {
constexpr double kEps = 1e-12;
const double kSqrtEps = std::sqrt(kEps);
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mcnl") return LossKind::mcnl;
  if (s == "triplet") return LossKind::triplet;
  if (s == "triplet_same") return LossKind::triplet_same;
  if (s == "triplet_other") return LossKind::triplet_other;
  throw ConfigError("unknown loss kind '" + s +
                    "' (expected mcnl, triplet, triplet_same or triplet_other)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mcnl: return "mcnl";
    case LossKind::triplet: return "triplet";
    case LossKind::triplet_same: return "triplet_same";
    case LossKind::triplet_other: return "triplet_other";
  }
  return "?";
}

void LossConfig::validate() const {
  if (m1 < 0 || m2 < 0 || triplet_margin < 0) throw ConfigError("margins must be >= 0");
}

Matrix pairwise_distances(const Matrix& emb) {
  const std::size_t n = emb.rows();
  Matrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(squared_distance(emb.row(i), emb.row(j)) + kEps) - kSqrtEps;
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace {

// Role of a batch entry relative to an anchor.
enum class Pair { positive, same_cam_negative, other_cam_negative, any_negative };

struct Mined {
  std::size_t index = 0;
  double dist = 0.0;
  bool found = false;
};

Mined mine(const Matrix& d, std::span<const int> ids, std::span<const int> cams, std::size_t a,
           Pair role) {
  Mined best;
  const bool want_max = (role == Pair::positive);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (j == a) continue;
    const bool same_id = ids[j] == ids[a];
    const bool same_cam = cams[j] == cams[a];
    bool matches = false;
    switch (role) {
      case Pair::positive: matches = same_id; break;
      case Pair::same_cam_negative: matches = !same_id && same_cam; break;
      case Pair::other_cam_negative: matches = !same_id && !same_cam; break;
      case Pair::any_negative: matches = !same_id; break;
    }
    if (!matches) continue;
    // strict comparison: ties resolve to the lowest flat index
    if (!best.found || (want_max ? d(a, j) > best.dist : d(a, j) < best.dist)) {
      best.index = j;
      best.dist = d(a, j);
      best.found = true;
    }
  }
  return best;
}

Mined require(const Matrix& d, std::span<const int> ids, std::span<const int> cams, std::size_t a,
              Pair role, const char* what) {
  Mined m = mine(d, ids, cams, a, role);
  if (!m.found) throw DataError("anchor " + std::to_string(a) + ": batch has no " + what);
  return m;
}

}  // namespace

LossOutput compute_loss(const Matrix& emb, std::span<const int> ids, std::span<const int> cams,
                        const LossConfig& cfg) {
  cfg.validate();
  const std::size_t n = emb.rows();
  if (ids.size() != n || cams.size() != n)
    throw DataError("label vectors do not match the embedding row count");

  const Matrix d = pairwise_distances(emb);

  LossOutput out;
  out.grad = Matrix(n, emb.cols(), 0.0);
  out.diagnostics.dist_pos.assign(n, kNaN);
  out.diagnostics.dist_same.assign(n, kNaN);
  out.diagnostics.dist_other.assign(n, kNaN);

  // Accumulates the subgradient of `weight * D[a][b]` into rows a and b.
  // D[a][b] + sqrt(eps) equals sqrt(ss + eps), the smoothed denominator.
  auto add_pair_grad = [&](std::size_t a, std::size_t b, double weight) {
    const double denom = d(a, b) + kSqrtEps;
    const auto ea = emb.row(a);
    const auto eb = emb.row(b);
    auto ga = out.grad.row(a);
    auto gb = out.grad.row(b);
    for (std::size_t c = 0; c < ea.size(); ++c) {
      const double g = weight * (ea[c] - eb[c]) / denom;
      ga[c] += g;
      gb[c] -= g;
    }
  };

  for (std::size_t a = 0; a < n; ++a) {
    const Mined pos = require(d, ids, cams, a, Pair::positive, "positive (same identity)");
    out.diagnostics.dist_pos[a] = pos.dist;

    if (cfg.kind == LossKind::mcnl) {
      const Mined same =
          require(d, ids, cams, a, Pair::same_cam_negative, "same-camera negative");
      const Mined other =
          require(d, ids, cams, a, Pair::other_cam_negative, "other-camera negative");
      out.diagnostics.dist_same[a] = same.dist;
      out.diagnostics.dist_other[a] = other.dist;
      const double z1 = cfg.m1 + pos.dist - other.dist;
      const double z2 = cfg.m2 + other.dist - same.dist;
      if (z1 > 0) {
        out.value += z1;
        ++out.diagnostics.active_hinge1;
        add_pair_grad(a, pos.index, +1.0);
        add_pair_grad(a, other.index, -1.0);
      }
      if (z2 > 0) {
        out.value += z2;
        ++out.diagnostics.active_hinge2;
        add_pair_grad(a, other.index, +1.0);
        add_pair_grad(a, same.index, -1.0);
      }
      continue;
    }

    Mined neg;
    switch (cfg.kind) {
      case LossKind::triplet:
        neg = require(d, ids, cams, a, Pair::any_negative, "negative (different identity)");
        break;
      case LossKind::triplet_same:
        neg = require(d, ids, cams, a, Pair::same_cam_negative, "same-camera negative");
        out.diagnostics.dist_same[a] = neg.dist;
        break;
      case LossKind::triplet_other:
        neg = require(d, ids, cams, a, Pair::other_cam_negative, "other-camera negative");
        out.diagnostics.dist_other[a] = neg.dist;
        break;
      default: break;
    }
    const double z = cfg.triplet_margin + pos.dist - neg.dist;
    if (z > 0) {
      out.value += z;
      ++out.diagnostics.active_hinge1;
      add_pair_grad(a, pos.index, +1.0);
      add_pair_grad(a, neg.index, -1.0);
    }
  }
  return out;
}

}  // namespace mcnl
