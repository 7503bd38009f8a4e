#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mcnl/dataset.hpp"
#include "mcnl/embedder.hpp"
#include "mcnl/eval.hpp"
#include "mcnl/losses.hpp"
#include "mcnl/optim.hpp"
#include "mcnl/sampler.hpp"

namespace mcnl {

// Evaluation snapshot logged alongside training: the test-set report plus the
// same cross-camera NN statistic computed on training-set features.
struct EvalSnapshot {
  EvalReport report;
  double xcam_nn_prob_train = 0.0;
};

// Called with epoch 0 before the first update, then after each epoch. Returns
// a snapshot when this epoch should be evaluated.
using EvalHook = std::function<std::optional<EvalSnapshot>(int epoch, const Embedder& e)>;

struct MetricsRecord {
  int epoch = 0;
  double mean_loss = 0.0;  // per-anchor mean over the epoch's batches
  double lr = 0.0;
  std::optional<EvalSnapshot> eval;
};

struct TrainRun {
  std::vector<MetricsRecord> records;  // one per epoch run
  Embedder embedder;                   // final parameters
  std::uint64_t seed = 0;
  std::optional<EvalSnapshot> initial_eval;  // hook output at epoch 0
};

// Runs optim.epochs epochs of sampled batches. The loss value is summed over
// anchors inside each batch; mean_loss divides the epoch total by the number
// of anchors seen, for readable logs. Deterministic given seed.
TrainRun train(const Dataset& train_set, const BatchSpec& batch, const LossConfig& loss,
               const OptimConfig& optim, const EmbedderConfig& embedder, std::uint64_t seed,
               const EvalHook& hook = {}, SamplingMode mode = SamplingMode::strict_sct);

}  // namespace mcnl
