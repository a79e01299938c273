// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/core.hpp"

#include <utility>
#include <vector>

namespace reflkit {

enum class Encoding { srgb, linear };

/**
 * Planar image: planes[c] holds channel c as a row-major float plane.
 * Samples live in [0, 1]; `encoding` declares how they relate to light.
 * 1 channel = grayscale, 3 channels = RGB in plane order R, G, B.
 */
struct Image {
  std::vector<PlaneF> planes;
  Encoding encoding = Encoding::srgb;

  Image() = default;
  Image(int h, int w, int c, Encoding enc) : encoding(enc) {
    require(h >= 1 && w >= 1 && (c == 1 || c == 3), "Image: bad dimensions");
    planes.assign(static_cast<size_t>(c), PlaneF::Zero(h, w));
  }

  int height() const { return planes.empty() ? 0 : static_cast<int>(planes[0].rows()); }
  int width() const { return planes.empty() ? 0 : static_cast<int>(planes[0].cols()); }
  int channels() const { return static_cast<int>(planes.size()); }

  bool same_shape(const Image& o) const {
    return height() == o.height() && width() == o.width() && channels() == o.channels();
  }
};

// sRGB electro-optical transfer function and its inverse, per component.
template <class T>
inline T srgb_to_linear_value(T s) {
  return s <= T(0.04045) ? s / T(12.92) : std::pow((s + T(0.055)) / T(1.055), T(2.4));
}

template <class T>
inline T linear_to_srgb_value(T l) {
  return l <= T(0.0031308) ? l * T(12.92) : T(1.055) * std::pow(l, T(1.0 / 2.4)) - T(0.055);
}

inline Image srgb_to_linear(const Image& img) {
  if (img.encoding == Encoding::linear) return img;
  Image out = img;
  out.encoding = Encoding::linear;
  for (auto& p : out.planes)
    p = p.unaryExpr([](float s) { return srgb_to_linear_value(s); });
  return out;
}

inline Image linear_to_srgb(const Image& img) {
  if (img.encoding == Encoding::srgb) return img;
  Image out = img;
  out.encoding = Encoding::srgb;
  for (auto& p : out.planes)
    p = p.unaryExpr([](float l) { return linear_to_srgb_value(l); });
  return out;
}

// Rec.601 luma on the stored samples (no linearization).
inline PlaneF to_grayscale(const Image& img) {
  require(img.channels() == 1 || img.channels() == 3, "to_grayscale: need 1 or 3 channels");
  if (img.channels() == 1) return img.planes[0];
  return 0.299f * img.planes[0] + 0.587f * img.planes[1] + 0.114f * img.planes[2];
}

inline Image crop(const Image& img, int x, int y, int w, int h) {
  require(x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= img.width() && y + h <= img.height(),
          "crop: rectangle out of bounds");
  Image out;
  out.encoding = img.encoding;
  out.planes.reserve(img.planes.size());
  for (const auto& p : img.planes) out.planes.emplace_back(p.block(y, x, h, w));
  return out;
}

struct CropResult {
  Image patch;
  int x = 0;
  int y = 0;
};

// Draws x then y uniformly over valid offsets. Same rng state, same offsets.
inline CropResult random_crop(const Image& img, int size, Rng& rng) {
  require(size >= 1 && size <= img.width() && size <= img.height(),
          "random_crop: size exceeds image");
  int x = rng.bounded_int(img.width() - size + 1);
  int y = rng.bounded_int(img.height() - size + 1);
  return {crop(img, x, y, size, size), x, y};
}

}  // namespace reflkit
