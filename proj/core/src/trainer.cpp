#include "mcnl/trainer.hpp"

#include "mcnl/rng.hpp"

namespace mcnl {

TrainRun train(const Dataset& train_set, const BatchSpec& batch, const LossConfig& loss,
               const OptimConfig& optim, const EmbedderConfig& embedder, std::uint64_t seed,
               const EvalHook& hook, SamplingMode mode) {
  batch.validate();
  loss.validate();
  optim.validate();
  embedder.validate();
  if (embedder.d_in != train_set.d_in())
    throw DataError("embedder d_in = " + std::to_string(embedder.d_in) +
                    " does not match the training set's " + std::to_string(train_set.d_in()));

  TrainRun run;
  run.seed = seed;
  run.embedder = Embedder(embedder, mix_seed(seed, 0x171));
  BatchSampler sampler(train_set, batch, mix_seed(seed, 0x5a3), mode);
  AdamState adam = AdamState::for_embedder(run.embedder);

  if (hook) run.initial_eval = hook(0, run.embedder);

  const std::size_t batches = sampler.batches_per_epoch();
  ForwardCache cache;
  for (int epoch = 1; epoch <= optim.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, optim);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const Batch mb = sampler.next();
      run.embedder.forward(mb.inputs, cache);
      const LossOutput lo = compute_loss(cache.activations.back(), mb.ids, mb.cams, loss);
      loss_sum += lo.value;
      const Gradients grads = run.embedder.backward(cache, lo.grad);
      adam_step(run.embedder.layers(), grads, adam, lr, optim.weight_decay, optim);
    }
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.mean_loss =
        loss_sum / (static_cast<double>(batches) * static_cast<double>(batch.batch_size()));
    if (hook) rec.eval = hook(epoch, run.embedder);
    run.records.push_back(std::move(rec));
  }
  return run;
}

}  // namespace mcnl
