#include "mcnl/sampler.hpp"

#include <algorithm>

namespace mcnl {

void BatchSpec::validate() const {
  if (c < 2 || p < 2 || k < 2)
    throw ConfigError("batch spec requires c >= 2, p >= 2, k >= 2 (got " + std::to_string(c) +
                      "," + std::to_string(p) + "," + std::to_string(k) + ")");
}

BatchSampler::BatchSampler(const Dataset& d, BatchSpec spec, std::uint64_t seed, SamplingMode mode)
    : data_(&d), spec_(spec), rng_(mix_seed(seed, 0xba7c)) {
  spec_.validate();
  if (d.empty()) throw DataError("cannot sample from an empty dataset");
  if (mode == SamplingMode::strict_sct && !d.is_sct())
    throw DataError(
        "dataset has cross-camera identities (CP > 1); camera-blocked sampling requires an SCT "
        "training set — use identity-major sampling for such data");
  for (const auto& [cam, id_map] : d.by_camera()) {
    if (id_map.empty()) continue;
    cameras_.push_back(cam);
    std::vector<Group> groups;
    groups.reserve(id_map.size());
    for (const auto& [id, indices] : id_map) groups.push_back(Group{id, indices});
    groups_.push_back(std::move(groups));
  }
  if (static_cast<int>(cameras_.size()) < spec_.c)
    throw DataError("dataset has " + std::to_string(cameras_.size()) +
                    " cameras with identities, batch spec needs " + std::to_string(spec_.c));
}

std::size_t BatchSampler::batches_per_epoch() const {
  const std::size_t bs = static_cast<std::size_t>(spec_.batch_size());
  return (data_->size() + bs - 1) / bs;
}

Batch BatchSampler::next() {
  Batch batch;
  batch.spec = spec_;
  batch.inputs = Matrix(static_cast<std::size_t>(spec_.batch_size()),
                        static_cast<std::size_t>(data_->d_in()));
  batch.ids.reserve(spec_.batch_size());
  batch.cams.reserve(spec_.batch_size());

  std::size_t row = 0;
  const auto cam_pick = rng_.sample_indices(cameras_.size(), static_cast<std::size_t>(spec_.c));
  for (std::size_t ci : cam_pick) {
    const int camera = cameras_[ci];
    const auto& groups = groups_[ci];

    std::vector<std::size_t> slots;
    if (groups.size() >= static_cast<std::size_t>(spec_.p)) {
      slots = rng_.sample_indices(groups.size(), static_cast<std::size_t>(spec_.p));
    } else {
      // Fewer identities than slots: use each once, then redraw uniformly so
      // every anchor still sees a same-camera negative when one exists.
      for (std::size_t g = 0; g < groups.size(); ++g) slots.push_back(g);
      while (slots.size() < static_cast<std::size_t>(spec_.p))
        slots.push_back(static_cast<std::size_t>(rng_.uniform_below(groups.size())));
    }

    for (std::size_t gi : slots) {
      const Group& group = groups[gi];
      const std::size_t n_imgs = group.example_indices.size();
      std::vector<std::size_t> picks;
      if (n_imgs >= static_cast<std::size_t>(spec_.k)) {
        picks = rng_.sample_indices(n_imgs, static_cast<std::size_t>(spec_.k));
      } else {
        for (int k = 0; k < spec_.k; ++k)
          picks.push_back(static_cast<std::size_t>(rng_.uniform_below(n_imgs)));
      }
      for (std::size_t pi : picks) {
        const auto& ex = data_->examples()[group.example_indices[pi]];
        std::copy(ex.input.begin(), ex.input.end(), batch.inputs.row(row).begin());
        batch.ids.push_back(ex.identity);
        batch.cams.push_back(camera);
        ++row;
      }
    }
  }
  return batch;
}

}  // namespace mcnl
