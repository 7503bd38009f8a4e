#pragma once

#include "mcnl/embedder.hpp"

namespace mcnl {

struct OptimConfig {
  double lr0 = 2e-4;          // initial learning rate
  int t0 = 100;               // epochs before decay starts
  int t1 = 200;               // decay endpoint; rate is clamped beyond it
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  int epochs = 200;

  void validate() const;
};

// Constant lr0 up to t0, then lr0 * 0.001^((t - t0)/(t1 - t0)) up to t1,
// constant afterwards. Continuous at t0 and non-increasing.
double lr_schedule(int epoch, const OptimConfig& cfg);

struct AdamState {
  Gradients m;  // first moments, shaped like the parameters
  Gradients v;  // second moments
  long step = 0;

  static AdamState for_embedder(const Embedder& e);
};

// One Adam update with bias correction. Weight decay is coupled: the L2 term
// is added to the gradient before the moment updates.
void adam_step(std::vector<Layer>& params, const Gradients& grads, AdamState& state, double lr,
               double weight_decay, const OptimConfig& cfg);

}  // namespace mcnl
