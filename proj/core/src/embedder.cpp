#include "mcnl/embedder.hpp"

#include <cmath>

#include <json.hpp>

#include "mcnl/io_util.hpp"
#include "mcnl/rng.hpp"

namespace mcnl {

void EmbedderConfig::validate() const {
  if (d_in < 1 || d_emb < 1) throw ConfigError("embedder d_in and d_emb must be >= 1");
  if (hidden_layers < 0) throw ConfigError("embedder hidden_layers must be >= 0");
  if (hidden_layers > 0 && hidden_dim < 1)
    throw ConfigError("embedder hidden_dim must be >= 1");
}

std::vector<int> EmbedderConfig::layer_dims() const {
  std::vector<int> dims{d_in};
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_dim);
  dims.push_back(d_emb);
  return dims;
}

Embedder::Embedder(const EmbedderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(mix_seed(seed, 0xe3bd));
  const auto dims = cfg_.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const auto fan_in = static_cast<std::size_t>(dims[l]);
    const auto fan_out = static_cast<std::size_t>(dims[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    layer.w = Matrix(fan_in, fan_out);
    for (std::size_t i = 0; i < fan_in; ++i)
      for (std::size_t j = 0; j < fan_out; ++j) layer.w(i, j) = rng.uniform_real(-bound, bound);
    layer.b.assign(fan_out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

Matrix Embedder::forward(const Matrix& inputs) const {
  ForwardCache cache;
  return forward(inputs, cache);
}

Matrix Embedder::forward(const Matrix& inputs, ForwardCache& cache) const {
  if (inputs.cols() != static_cast<std::size_t>(cfg_.d_in))
    throw DataError("forward: input width " + std::to_string(inputs.cols()) +
                    " does not match d_in = " + std::to_string(cfg_.d_in));
  cache.activations.clear();
  cache.activations.reserve(layers_.size() + 1);
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const Matrix& a = cache.activations.back();
    Matrix z(a.rows(), layer.w.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto arow = a.row(i);
      auto zrow = z.row(i);
      for (std::size_t j = 0; j < layer.w.cols(); ++j) zrow[j] = layer.b[j];
      for (std::size_t kk = 0; kk < layer.w.rows(); ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const auto wrow = layer.w.row(kk);
        for (std::size_t j = 0; j < layer.w.cols(); ++j) zrow[j] += av * wrow[j];
      }
      if (l + 1 < layers_.size())  // rectify hidden layers only
        for (std::size_t j = 0; j < layer.w.cols(); ++j)
          if (zrow[j] < 0.0) zrow[j] = 0.0;
    }
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

Gradients Embedder::zero_gradients() const {
  Gradients grads;
  grads.reserve(layers_.size());
  for (const Layer& layer : layers_) {
    Layer g;
    g.w = Matrix(layer.w.rows(), layer.w.cols(), 0.0);
    g.b.assign(layer.b.size(), 0.0);
    grads.push_back(std::move(g));
  }
  return grads;
}

Gradients Embedder::backward(const ForwardCache& cache, const Matrix& grad_out) const {
  if (cache.activations.size() != layers_.size() + 1)
    throw DataError("backward: stale or mismatched forward cache");
  const Matrix& out = cache.activations.back();
  if (!grad_out.same_shape(out))
    throw DataError("backward: grad_out shape does not match the forward output");
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (cache.activations[l].cols() != layers_[l].w.rows())
      throw DataError("backward: stale or mismatched forward cache");

  Gradients grads = zero_gradients();
  Matrix delta = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const Matrix& a_prev = cache.activations[l];

    // dW = a_prev^T * delta, db = column sums of delta
    Layer& g = grads[l];
    for (std::size_t i = 0; i < a_prev.rows(); ++i) {
      const auto arow = a_prev.row(i);
      const auto drow = delta.row(i);
      for (std::size_t j = 0; j < layer.w.cols(); ++j) g.b[j] += drow[j];
      for (std::size_t kk = 0; kk < layer.w.rows(); ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        auto gwrow = g.w.row(kk);
        for (std::size_t j = 0; j < layer.w.cols(); ++j) gwrow[j] += av * drow[j];
      }
    }

    if (l == 0) break;
    // delta_prev = (delta * W^T) masked by the rectifier of layer l-1
    Matrix prev(delta.rows(), layer.w.rows(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto drow = delta.row(i);
      auto prow = prev.row(i);
      for (std::size_t kk = 0; kk < layer.w.rows(); ++kk) {
        const auto wrow = layer.w.row(kk);
        double s = 0.0;
        for (std::size_t j = 0; j < layer.w.cols(); ++j) s += drow[j] * wrow[j];
        prow[kk] = s;
      }
      const auto act = cache.activations[l].row(i);
      for (std::size_t kk = 0; kk < layer.w.rows(); ++kk)
        if (act[kk] <= 0.0) prow[kk] = 0.0;
    }
    delta = std::move(prev);
  }
  return grads;
}

namespace {
using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw DataError("checkpoint: ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}
}  // namespace

void save_checkpoint(const Embedder& e, const std::string& path) {
  json j;
  j["format"] = "mcnl-embedder";
  j["version"] = 1;
  j["config"] = {{"d_in", e.config().d_in},
                 {"hidden_dim", e.config().hidden_dim},
                 {"hidden_layers", e.config().hidden_layers},
                 {"d_emb", e.config().d_emb}};
  json layers = json::array();
  for (const Layer& layer : e.layers())
    layers.push_back({{"w", matrix_to_json(layer.w)}, {"b", layer.b}});
  j["layers"] = std::move(layers);
  write_file_atomic(path, j.dump() + "\n");
}

Embedder load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != "mcnl-embedder")
      throw DataError("checkpoint '" + path + "': unrecognized format field");
    if (j.at("version").get<int>() != 1)
      throw DataError("checkpoint '" + path + "': unsupported version");
    EmbedderConfig cfg;
    cfg.d_in = j["config"].at("d_in").get<int>();
    cfg.hidden_dim = j["config"].at("hidden_dim").get<int>();
    cfg.hidden_layers = j["config"].at("hidden_layers").get<int>();
    cfg.d_emb = j["config"].at("d_emb").get<int>();
    Embedder e(cfg, 0);
    auto& layers = e.layers();
    if (j["layers"].size() != layers.size())
      throw DataError("checkpoint '" + path + "': wrong layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix w = matrix_from_json(j["layers"][l].at("w"));
      if (!w.same_shape(layers[l].w))
        throw DataError("checkpoint '" + path + "': layer " + std::to_string(l) +
                        " has the wrong shape");
      layers[l].w = std::move(w);
      layers[l].b = j["layers"][l].at("b").get<std::vector<double>>();
      if (layers[l].b.size() != layers[l].w.cols())
        throw DataError("checkpoint '" + path + "': layer " + std::to_string(l) +
                        " bias has the wrong size");
    }
    return e;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace mcnl
