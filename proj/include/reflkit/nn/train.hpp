// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/compositor.hpp"
#include "reflkit/dataset.hpp"
#include "reflkit/nn/checkpoint.hpp"

#include <memory>
#include <string>
#include <vector>

namespace reflkit::nn {

struct LogRow {
  std::uint32_t iter = 0;
  double lr = 0.0;
  double loss_dnet = 0.0;
  double loss_rnet = 0.0;
};

struct TrainBatch {
  std::vector<Image> i, t;
  std::vector<int> index;  // pool index per item, -1 for streamed draws
};

// Supplies co-located (I, T) patch pairs, one batch at a time.
class PatchSource {
 public:
  virtual ~PatchSource() = default;
  virtual void next_batch(int batch, TrainBatch& out) = 0;
  // > 0 when batches cycle a fixed pool (mask targets are then cacheable).
  virtual int pool_size() const = 0;
};

/**
 * Fixed pool cycled in order (batch k covers pool entries k*B..k*B+B-1 mod
 * size), which makes small-pool runs exact epochs.
 */
class PoolSource final : public PatchSource {
 public:
  explicit PoolSource(std::vector<ComposedPair> pool);
  void next_batch(int batch, TrainBatch& out) override;
  int pool_size() const override { return static_cast<int>(pool_.size()); }
  const ComposedPair& at(int i) const { return pool_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<ComposedPair> pool_;
  std::size_t cursor_ = 0;
};

// Streams seeded random crops from manifest clips (clip, frame, x, y order).
class ManifestSource final : public PatchSource {
 public:
  ManifestSource(PairManifest m, std::string base_dir, int patch, std::uint64_t seed);
  void next_batch(int batch, TrainBatch& out) override;
  int pool_size() const override { return 0; }

 private:
  PairManifest m_;
  std::string base_;
  int patch_;
  Rng rng_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogRow> log;
  // The iteration-1 batch, kept so callers can verify the training curve's
  // exact starting point against an independent loss evaluation.
  Tensor<float> first_batch_i, first_batch_t;
};

/**
 * Runs the detect-then-remove cascade: per iteration, forward the detector,
 * L_DNet against the configured mask target, forward the remover on
 * concat(I, M_hat), L_RNet, backprop, one Adam step at the cosine-annealed
 * rate. Weights draw from Rng(seed); batches and losses are bit-deterministic
 * given the config. Logs iteration 1, every log_every, and the final
 * iteration, with losses measured before the update. Throws on non-finite
 * loss, naming the iteration.
 */
TrainResult train(const TrainConfig& cfg, PatchSource& source);

// CSV rows `iter,lr,loss_dnet,loss_rnet` with fixed formatting.
void write_log_csv(const std::string& path, const std::vector<LogRow>& log);

// Stacks same-shaped RGB images into an (N, 3, H, W) tensor of stored values.
Tensor<float> images_to_tensor(const std::vector<Image>& imgs);

// Detection target for one pair under the configured mode: the smoothed
// default extraction, the exact comparison-only variant, or all zeros.
Tensor<float> mask_target(const Image& i, const Image& t, MaskTargetMode mode);

struct InferResult {
  Image mask;  // 1 channel, values in (0, 1)
  Image that;  // 3 channels, clamped to [0, 1]
};

// Runs both stages on a single image of any size >= 1x1.
InferResult infer(const Checkpoint& ckpt, const Image& input);

}  // namespace reflkit::nn
