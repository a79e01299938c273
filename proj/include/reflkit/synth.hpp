// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/compositor.hpp"

#include <cstdint>
#include <vector>

namespace reflkit {

/**
 * Multi-octave value-noise RGB texture (encoded sRGB values in [lo, hi]).
 * Draw order: shared octaves coarse to fine, then one refinement octave per
 * channel in R, G, B order. Moderate contrast keeps encoded slopes gentle so
 * ambient ramps stay below typical reflection-detection margins.
 */
Image synth_texture(int h, int w, Rng& rng, float lo = 0.30f, float hi = 0.80f);

/**
 * Higher-contrast, coarser-grained texture for virtual objects; its features
 * are large enough to survive the compositor's local blur.
 */
Image synth_object(int h, int w, Rng& rng, float lo = 0.15f, float hi = 0.95f);

struct SynthPairOptions {
  int canvas = 224;
  int object = 72;
  ReflectionSpec spec;  // seed is overridden per pair
  float t_lo = 0.30f;
  float t_hi = 0.80f;
  float o_lo = 0.15f;
  float o_hi = 0.95f;
  bool with_object = true;
};

// One textured transmission + composed reflection pair, fully seeded.
ComposedPair synth_pair(const SynthPairOptions& opt, std::uint64_t seed);

/**
 * Training pool of `count` patch-sized pairs with per-sample variation in
 * ambient gain, object opacity, and object size; every 4th sample is
 * ambient-only. Variation is what makes mask guidance informative.
 */
std::vector<ComposedPair> make_toy_pool(int count, int patch, std::uint64_t seed);

}  // namespace reflkit
