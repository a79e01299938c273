// SPDX-License-Identifier: Apache-2.0
#include "reflkit/synth.hpp"

#include "reflkit/filters.hpp"

namespace reflkit {

namespace {

PlaneF octave(int h, int w, int cells, Rng& rng) {
  PlaneF grid(cells, cells);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) grid(i, j) = rng.uniform_float();
  return bilinear_upsample(grid, h, w);
}

Image mix_octaves(int h, int w, Rng& rng, float lo, float hi, int coarse, int fine,
                  float shared_w) {
  PlaneF shared = 0.6f * octave(h, w, coarse, rng) + 0.4f * octave(h, w, fine, rng);
  Image img(h, w, 3, Encoding::srgb);
  for (int c = 0; c < 3; ++c) {
    PlaneF own = octave(h, w, fine, rng);
    PlaneF v = shared_w * shared + (1.0f - shared_w) * own;
    img.planes[c] = (lo + (hi - lo) * v).max(lo).min(hi);
  }
  return img;
}

}  // namespace

Image synth_texture(int h, int w, Rng& rng, float lo, float hi) {
  require(lo >= 0.0f && hi <= 1.0f && lo < hi, "synth_texture: bad range");
  PlaneF shared =
      0.5f * octave(h, w, 4, rng) + 0.3f * octave(h, w, 8, rng) + 0.2f * octave(h, w, 16, rng);
  Image img(h, w, 3, Encoding::srgb);
  for (int c = 0; c < 3; ++c) {
    PlaneF own = octave(h, w, 8, rng);
    PlaneF v = 0.75f * shared + 0.25f * own;
    img.planes[c] = (lo + (hi - lo) * v).max(lo).min(hi);
  }
  return img;
}

Image synth_object(int h, int w, Rng& rng, float lo, float hi) {
  require(lo >= 0.0f && hi <= 1.0f && lo < hi, "synth_object: bad range");
  return mix_octaves(h, w, rng, lo, hi, 3, 6, 0.85f);
}

ComposedPair synth_pair(const SynthPairOptions& opt, std::uint64_t seed) {
  require(opt.canvas >= 8, "synth_pair: canvas too small");
  Rng rng(seed);
  Image t = synth_texture(opt.canvas, opt.canvas, rng, opt.t_lo, opt.t_hi);
  ReflectionSpec spec = opt.spec;
  spec.seed = seed ^ 0x9E3779B97F4A7C15ull;
  if (opt.with_object && spec.local_alpha > 0.0f) {
    Image obj = synth_object(opt.object, opt.object, rng, opt.o_lo, opt.o_hi);
    return compose_pair(t, spec, &obj);
  }
  spec.local_alpha = 0.0f;
  return compose_pair(t, spec, nullptr);
}

std::vector<ComposedPair> make_toy_pool(int count, int patch, std::uint64_t seed) {
  require(count >= 0, "make_toy_pool: count must be >= 0");
  require(patch >= 16, "make_toy_pool: patch must be >= 16");
  Rng meta(seed);
  std::vector<ComposedPair> pool;
  pool.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    SynthPairOptions o;
    o.canvas = patch;
    const int omin = std::max(8, (3 * patch) / 8);
    o.object = omin + meta.bounded_int(patch / 4 + 1);
    o.spec.ambient_gain = meta.uniform_float(0.06f, 0.18f);
    o.spec.local_alpha = meta.uniform_float(0.30f, 0.80f);
    const std::uint64_t pair_seed = meta.raw();
    o.with_object = (k % 4) != 3;
    pool.push_back(synth_pair(o, pair_seed));
  }
  return pool;
}

}  // namespace reflkit
