#include "mcnl/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "mcnl/matrix.hpp"
#include "mcnl/rng.hpp"

namespace mcnl {

void SynthConfig::validate() const {
  if (n_cameras < 1 || ids_per_camera_train < 1 || images_per_id < 1 || n_test_ids < 1)
    throw ConfigError("synth counts must be >= 1");
  if (d_in < 1 || d_id < 1 || d_cam < 1) throw ConfigError("synth dimensions must be >= 1");
  if (d_id + d_cam > d_in)
    throw ConfigError("d_id + d_cam = " + std::to_string(d_id + d_cam) + " exceeds d_in = " +
                      std::to_string(d_in));
  if (test_cams_per_id < 2) throw ConfigError("test_cams_per_id must be >= 2");
  if (test_cams_per_id > n_cameras)
    throw ConfigError("test_cams_per_id exceeds the number of cameras");
  if (alpha_id < 0 || alpha_cam < 0 || sigma < 0)
    throw ConfigError("alpha_id, alpha_cam and sigma must be >= 0");
}

namespace {

// Columns of a d_in x k Gaussian matrix, orthonormalized by modified
// Gram-Schmidt. The first d_id columns become A, the rest B, which makes the
// two column spaces mutually orthogonal by construction.
std::vector<std::vector<double>> orthonormal_columns(int d_in, int k, Rng& rng) {
  std::vector<std::vector<double>> cols(k, std::vector<double>(d_in));
  for (int c = 0; c < k; ++c) {
    auto& col = cols[c];
    while (true) {
      for (double& v : col) v = rng.normal();
      // project out previously accepted columns
      for (int p = 0; p < c; ++p) {
        const auto& prev = cols[p];
        double dot = 0.0;
        for (int i = 0; i < d_in; ++i) dot += col[i] * prev[i];
        for (int i = 0; i < d_in; ++i) col[i] -= dot * prev[i];
      }
      double norm = 0.0;
      for (double v : col) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (double& v : col) v /= norm;
        break;
      }
      // near-dependent draw (measure zero); redraw this column
    }
  }
  return cols;
}

std::vector<double> draw_vector(int n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();

  // Independent sub-streams so each phase draws a stable sequence.
  Rng rng_mix(mix_seed(cfg.seed, 1));
  Rng rng_latent(mix_seed(cfg.seed, 2));
  Rng rng_assign(mix_seed(cfg.seed, 3));
  Rng rng_noise(mix_seed(cfg.seed, 4));

  const auto cols = orthonormal_columns(cfg.d_in, cfg.d_id + cfg.d_cam, rng_mix);

  const int n_train = cfg.n_train_ids();
  std::vector<std::vector<double>> v_cam(cfg.n_cameras);
  for (auto& v : v_cam) v = draw_vector(cfg.d_cam, rng_latent);
  std::vector<std::vector<double>> u_train(n_train);
  for (auto& u : u_train) u = draw_vector(cfg.d_id, rng_latent);
  std::vector<std::vector<double>> u_test(cfg.n_test_ids);
  for (auto& u : u_test) u = draw_vector(cfg.d_id, rng_latent);

  // Camera memberships: train identity i gets home camera i / ids_per_camera
  // plus (test_cams_per_id - 1) extra cameras; test identities get
  // test_cams_per_id cameras, both drawn uniformly without replacement.
  std::vector<std::vector<int>> train_cams(n_train);
  for (int i = 0; i < n_train; ++i) {
    const int home = i / cfg.ids_per_camera_train;
    std::vector<int> others;
    for (int c = 0; c < cfg.n_cameras; ++c)
      if (c != home) others.push_back(c);
    std::vector<int> extra;
    for (std::size_t idx :
         rng_assign.sample_indices(others.size(), static_cast<std::size_t>(cfg.test_cams_per_id - 1)))
      extra.push_back(others[idx]);
    std::sort(extra.begin(), extra.end());
    train_cams[i].push_back(home);
    train_cams[i].insert(train_cams[i].end(), extra.begin(), extra.end());
  }
  std::vector<std::vector<int>> test_cams(cfg.n_test_ids);
  for (int t = 0; t < cfg.n_test_ids; ++t) {
    std::vector<int> chosen;
    for (std::size_t idx : rng_assign.sample_indices(static_cast<std::size_t>(cfg.n_cameras),
                                                     static_cast<std::size_t>(cfg.test_cams_per_id)))
      chosen.push_back(static_cast<int>(idx));
    std::sort(chosen.begin(), chosen.end());
    test_cams[t] = std::move(chosen);
  }

  auto make_image = [&](const std::vector<double>& u, int camera) {
    std::vector<double> x(cfg.d_in, 0.0);
    for (int j = 0; j < cfg.d_id; ++j) {
      const double w = cfg.alpha_id * u[j];
      const auto& col = cols[j];
      for (int i = 0; i < cfg.d_in; ++i) x[i] += w * col[i];
    }
    for (int j = 0; j < cfg.d_cam; ++j) {
      const double w = cfg.alpha_cam * v_cam[camera][j];
      const auto& col = cols[cfg.d_id + j];
      for (int i = 0; i < cfg.d_in; ++i) x[i] += w * col[i];
    }
    for (int i = 0; i < cfg.d_in; ++i) x[i] += cfg.sigma * rng_noise.normal();
    return x;
  };

  std::vector<LabeledExample> full, train;
  for (int i = 0; i < n_train; ++i) {
    const int home = train_cams[i][0];
    for (int cam : train_cams[i]) {
      for (int k = 0; k < cfg.images_per_id; ++k) {
        LabeledExample ex{make_image(u_train[i], cam), i, cam};
        if (cam == home) train.push_back(ex);
        full.push_back(std::move(ex));
      }
    }
  }

  std::vector<LabeledExample> query, gallery;
  for (int t = 0; t < cfg.n_test_ids; ++t) {
    const int label = n_train + t;
    for (int cam : test_cams[t]) {
      for (int k = 0; k < cfg.images_per_id; ++k) {
        LabeledExample ex{make_image(u_test[t], cam), label, cam};
        if (k == 0)
          query.push_back(std::move(ex));
        else
          gallery.push_back(std::move(ex));
      }
    }
  }

  SynthData out;
  out.train = Dataset(std::move(train), cfg.n_cameras, cfg.d_in);
  out.full_train = Dataset(std::move(full), cfg.n_cameras, cfg.d_in);
  out.query = Dataset(std::move(query), cfg.n_cameras, cfg.d_in);
  out.gallery = Dataset(std::move(gallery), cfg.n_cameras, cfg.d_in);
  return out;
}

}  // namespace mcnl
