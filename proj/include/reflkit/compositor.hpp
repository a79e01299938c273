// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/analysis.hpp"
#include "reflkit/image.hpp"

#include <cstdint>

namespace reflkit {

// Object placement inside the canvas: a fixed top-left corner or seeded random.
struct Placement {
  bool random = true;
  int x = 0;
  int y = 0;
};

/**
 * Parameters of the two-component reflection model: a smooth channel-uniform
 * ambient gain field plus a blurred local virtual-object layer, added in
 * linear light. The seed fully determines every random draw.
 */
struct ReflectionSpec {
  float ambient_gain = 0.12f;  // g0 in [0, 0.5]
  int ambient_cells = 4;       // control grid is cells x cells, bilinearly upsampled
  float local_alpha = 0.5f;    // in [0, 1]
  float local_blur = 2.5f;     // Gaussian sigma in pixels, >= 0
  Placement placement;
  std::uint64_t seed = 0;
};

/**
 * An aligned synthetic pair. `ref_support` marks where the local layer has
 * gradient energy; `clipped` marks pixels where composition saturated any
 * channel of I (these are excluded from containment checks downstream).
 */
struct ComposedPair {
  Image i;
  Image t;
  ReflectionMask ref_support;
  ReflectionMask clipped;
  std::int64_t clipped_count = 0;
  ReflectionSpec spec_used;
};

struct LocalLayer {
  Image layer;  // linear light, canvas-sized
  ReflectionMask support;
};

/**
 * Smooth gain field: a cells x cells grid of uniform draws in [0.5*g0, g0]
 * (row-major draw order), bilinearly upsampled to h x w. All outputs in
 * [0, g0]. g0 = 0 yields an all-zero plane but consumes the same draws, so
 * streams stay comparable across gains.
 */
PlaneF make_ambient_field(int h, int w, float g0, int cells, Rng& rng);

/**
 * Linearizes `obj`, scales it by spec.local_alpha, places it on a zero canvas
 * (random placements draw x then y), and blurs by spec.local_blur. Support is
 * the set of pixels whose blurred-layer grayscale Sobel magnitude exceeds
 * 1e-3, dilated by radius 2. Throws if the placement falls out of bounds.
 */
LocalLayer make_local_layer(const Image& obj, int canvas_h, int canvas_w,
                            const ReflectionSpec& spec, Rng& rng);

/**
 * I_lin = clip01(linearize(T) + ambient + layer) per channel, re-encoded to
 * sRGB; T is returned unchanged. `obj` may be null only when local_alpha is 0.
 * Draw order: ambient grid first, then placement.
 */
ComposedPair compose_pair(const Image& t, const ReflectionSpec& spec, const Image* obj);

}  // namespace reflkit
