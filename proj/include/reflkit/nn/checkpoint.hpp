// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/net.hpp"
#include "reflkit/nn/trainconfig.hpp"

#include <string>

namespace reflkit::nn {

/**
 * On-disk format (little-endian throughout):
 *   magic "RFLK" | u32 version | config block | u64 iteration |
 *   u32 tensor count | per tensor: u32 name length, name bytes, u32 rank,
 *   u32 dims[rank], f32 data (canonical NCHW order).
 * Tensors are written sorted by name; round trips are bit-exact.
 */
struct Checkpoint {
  std::uint32_t version = 1;
  TrainConfig config;
  std::uint64_t iteration = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  static Checkpoint from_params(const ParamStore<float>& ps, const TrainConfig& cfg,
                                std::uint64_t iteration);
  ParamStore<float> to_params() const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace reflkit::nn
