#pragma once

#include <cstdint>

#include "mcnl/dataset.hpp"

namespace mcnl {

// Synthetic inputs carry an identity signal and a camera-shortcut signal in
// orthogonal linear subspaces:
//
//   x = alpha_id * (A u_id) + alpha_cam * (B v_cam) + sigma * n
//
// with per-identity latent u_id, per-camera latent v_cam, per-image noise n,
// and fixed mixing matrices A, B with orthonormal, mutually orthogonal
// columns. alpha_id and alpha_cam directly control the subspace energies, so
// the strength of the camera shortcut is a single knob. The default
// alpha_cam = 2 puts the generator in the camera-dominant regime where
// single-camera training actually bites; with alpha_cam = 0 inputs depend on
// cameras only through noise.
struct SynthConfig {
  int n_cameras = 8;
  int ids_per_camera_train = 32;
  int images_per_id = 8;
  int n_test_ids = 40;
  // Cameras per test identity, and per train identity in the full (non-SCT)
  // variant used for outlier injection.
  int test_cams_per_id = 4;
  int d_in = 64;
  int d_id = 16;
  int d_cam = 8;
  double alpha_id = 1.0;
  double alpha_cam = 2.0;
  double sigma = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
  int n_train_ids() const { return n_cameras * ids_per_camera_train; }
};

struct SynthData {
  Dataset train;       // SCT: each train identity under its home camera only
  Dataset full_train;  // same identities in test_cams_per_id cameras each
  Dataset query;       // one image per (test identity, camera)
  Dataset gallery;     // remaining test images
};

// Deterministic in cfg (bit-identical datasets for equal configs). Train
// identity i lives in home camera i / ids_per_camera_train, so `train` is an
// SCT split of `full_train` and has exactly ids_per_camera_train identities
// per camera. Test identity labels start at n_train_ids().
SynthData generate(const SynthConfig& cfg);

}  // namespace mcnl
