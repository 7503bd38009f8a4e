#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcnl/errors.hpp"
#include "mcnl/matrix.hpp"

namespace mcnl {

struct EmbedderConfig {
  int d_in = 64;
  int hidden_dim = 64;
  int hidden_layers = 2;
  int d_emb = 32;

  void validate() const;
  std::vector<int> layer_dims() const;  // d_in, hidden..., d_emb

  friend bool operator==(const EmbedderConfig&, const EmbedderConfig&) = default;
};

struct Layer {
  Matrix w;               // in x out
  std::vector<double> b;  // out

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ForwardCache {
  // activations[0] is the input; activations[i] the output of layer i-1
  // (rectified for hidden layers). Sized len(layers)+1.
  std::vector<Matrix> activations;
};

using Gradients = std::vector<Layer>;

// Fully connected embedding network: affine layers with rectifier activations
// on hidden layers and a linear final layer. Weights start uniform in
// +-sqrt(6 / fan_in), biases at zero; deterministic given the seed.
class Embedder {
 public:
  Embedder() = default;
  Embedder(const EmbedderConfig& cfg, std::uint64_t seed);

  const EmbedderConfig& config() const { return cfg_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, ForwardCache& cache) const;

  // Exact gradients of sum_ij grad_out[i][j] * emb[i][j] with respect to all
  // parameters. The cache must come from a matching forward on this network.
  Gradients backward(const ForwardCache& cache, const Matrix& grad_out) const;

  Gradients zero_gradients() const;

  friend bool operator==(const Embedder&, const Embedder&) = default;

 private:
  EmbedderConfig cfg_;
  std::vector<Layer> layers_;
};

// Versioned JSON checkpoint; round-trip is lossless (shortest round-trip
// float encoding).
void save_checkpoint(const Embedder& e, const std::string& path);
Embedder load_checkpoint(const std::string& path);

}  // namespace mcnl
