#include "mcnl/optim.hpp"

#include <cmath>

namespace mcnl {

void OptimConfig::validate() const {
  if (lr0 < 0) throw ConfigError("lr0 must be >= 0");
  if (!(0 < t0 && t0 < t1)) throw ConfigError("schedule requires 0 < t0 < t1");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (eps_hat <= 0) throw ConfigError("adam eps_hat must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

double lr_schedule(int epoch, const OptimConfig& cfg) {
  if (epoch <= cfg.t0) return cfg.lr0;
  const int t = epoch < cfg.t1 ? epoch : cfg.t1;
  const double frac = static_cast<double>(t - cfg.t0) / static_cast<double>(cfg.t1 - cfg.t0);
  return cfg.lr0 * std::pow(0.001, frac);
}

AdamState AdamState::for_embedder(const Embedder& e) {
  AdamState s;
  s.m = e.zero_gradients();
  s.v = e.zero_gradients();
  return s;
}

namespace {

void update_span(std::span<double> p, std::span<const double> g, std::span<double> m,
                 std::span<double> v, double lr, double wd, const OptimConfig& cfg,
                 double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double grad = g[i] + wd * p[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps_hat);
  }
}

}  // namespace

void adam_step(std::vector<Layer>& params, const Gradients& grads, AdamState& state, double lr,
               double weight_decay, const OptimConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw DataError("adam_step: parameter/gradient/state layer counts differ");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.size(); ++l) {
    Layer& p = params[l];
    const Layer& g = grads[l];
    if (!p.w.same_shape(g.w) || p.b.size() != g.b.size())
      throw DataError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
    update_span({p.w.data(), p.w.rows() * p.w.cols()},
                {g.w.data(), g.w.rows() * g.w.cols()},
                {state.m[l].w.data(), p.w.rows() * p.w.cols()},
                {state.v[l].w.data(), p.w.rows() * p.w.cols()}, lr, weight_decay, cfg, bc1, bc2);
    update_span(p.b, g.b, state.m[l].b, state.v[l].b, lr, weight_decay, cfg, bc1, bc2);
  }
}

}  // namespace mcnl
