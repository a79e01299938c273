// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace reflkit::nn {

// How RDNet's training targets are derived from each (I, T) pair.
enum class MaskTargetMode : std::uint8_t {
  cleaned = 0,  // maxrf with the robustness defaults (margin, pre-blur, majority vote)
  exact = 1,    // bare strict-inequality comparison, no knobs
  zero = 2,     // all-zero targets (guidance-suppression ablation)
};

struct TrainConfig {
  float lr0 = 6e-4f;
  std::uint32_t total_iters = 2000;
  std::uint32_t batch = 4;
  std::uint32_t patch = 64;  // toy default; 320 for manifest-backed training
  float gamma1 = 5e-5f;
  float gamma2 = 0.02f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  std::uint64_t seed = 0;
  bool detach_mask = true;
  bool joint = true;
  MaskTargetMode mask_mode = MaskTargetMode::cleaned;
  std::uint32_t log_every = 10;
};

}  // namespace reflkit::nn
