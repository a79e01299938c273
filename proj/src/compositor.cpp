// SPDX-License-Identifier: Apache-2.0
#include "reflkit/compositor.hpp"

#include "reflkit/filters.hpp"

namespace reflkit {

namespace {

void check_spec(const ReflectionSpec& s) {
  require(s.ambient_gain >= 0.0f && s.ambient_gain <= 0.5f,
          "compose: ambient_gain must be in [0, 0.5]");
  require(s.ambient_cells >= 1, "compose: ambient_cells must be >= 1");
  require(s.local_alpha >= 0.0f && s.local_alpha <= 1.0f,
          "compose: local_alpha must be in [0, 1]");
  require(s.local_blur >= 0.0f, "compose: local_blur must be >= 0");
}

}  // namespace

PlaneF make_ambient_field(int h, int w, float g0, int cells, Rng& rng) {
  require(h >= 1 && w >= 1, "make_ambient_field: bad dimensions");
  require(g0 >= 0.0f, "make_ambient_field: g0 must be >= 0");
  require(cells >= 1, "make_ambient_field: cells must be >= 1");
  PlaneF grid(cells, cells);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      grid(i, j) = rng.uniform_float(0.5f * g0, g0);
  PlaneF field = bilinear_upsample(grid, h, w);
  // Interpolation is convex, but guard the stated range against rounding.
  return field.max(0.0f).min(g0);
}

LocalLayer make_local_layer(const Image& obj, int canvas_h, int canvas_w,
                            const ReflectionSpec& spec, Rng& rng) {
  check_spec(spec);
  require(obj.channels() == 1 || obj.channels() == 3, "make_local_layer: bad object");
  const int oh = obj.height();
  const int ow = obj.width();
  require(oh <= canvas_h && ow <= canvas_w, "make_local_layer: object larger than canvas");

  int x, y;
  if (spec.placement.random) {
    x = rng.bounded_int(canvas_w - ow + 1);
    y = rng.bounded_int(canvas_h - oh + 1);
  } else {
    x = spec.placement.x;
    y = spec.placement.y;
    require(x >= 0 && y >= 0 && x + ow <= canvas_w && y + oh <= canvas_h,
            "make_local_layer: placement out of bounds");
  }

  Image obj_lin = srgb_to_linear(obj);
  LocalLayer out;
  out.layer = Image(canvas_h, canvas_w, 3, Encoding::linear);
  for (int c = 0; c < 3; ++c) {
    const PlaneF& src = obj_lin.planes[obj.channels() == 3 ? c : 0];
    out.layer.planes[c].block(y, x, oh, ow) = src * spec.local_alpha;
  }
  if (spec.local_blur > 0.0f) out.layer = gaussian_blur(out.layer, spec.local_blur);

  const PlaneF mag = sobel(to_grayscale(out.layer)).magnitude;
  out.support = dilate((mag > 1e-3f).cast<std::uint8_t>(), 2);
  return out;
}

ComposedPair compose_pair(const Image& t, const ReflectionSpec& spec, const Image* obj) {
  check_spec(spec);
  require(t.channels() == 3, "compose_pair: transmission must be RGB");
  require(obj != nullptr || spec.local_alpha == 0.0f,
          "compose_pair: object required when local_alpha > 0");
  const int h = t.height();
  const int w = t.width();

  Rng rng(spec.seed);
  const PlaneF ambient = make_ambient_field(h, w, spec.ambient_gain, spec.ambient_cells, rng);

  LocalLayer local;
  if (obj != nullptr) {
    local = make_local_layer(*obj, h, w, spec, rng);
  } else {
    local.layer = Image(h, w, 3, Encoding::linear);
    local.support = ReflectionMask::Zero(h, w);
  }

  const Image t_lin = srgb_to_linear(t);
  Image i_lin(h, w, 3, Encoding::linear);
  ReflectionMask clipped = ReflectionMask::Zero(h, w);
  for (int c = 0; c < 3; ++c) {
    PlaneF pre = t_lin.planes[c] + ambient + local.layer.planes[c];
    clipped = clipped.max((pre >= 1.0f).cast<std::uint8_t>());
    i_lin.planes[c] = pre.max(0.0f).min(1.0f);
  }

  ComposedPair out;
  out.i = linear_to_srgb(i_lin);
  out.t = t;
  out.ref_support = std::move(local.support);
  out.clipped_count = static_cast<std::int64_t>((clipped != 0).count());
  out.clipped = std::move(clipped);
  out.spec_used = spec;
  return out;
}

}  // namespace reflkit
