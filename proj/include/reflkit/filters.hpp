// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/image.hpp"

#include <algorithm>
#include <vector>

namespace reflkit {

template <class T>
struct GradientMapT {
  Plane<T> gx, gy, magnitude;
};
using GradientMap = GradientMapT<float>;

namespace detail {

// Replicate (clamp-to-edge) pad by one pixel on each side.
template <class T>
Plane<T> pad1_replicate(const Plane<T>& p) {
  const auto h = p.rows(), w = p.cols();
  Plane<T> out(h + 2, w + 2);
  out.block(1, 1, h, w) = p;
  out.block(0, 1, 1, w) = p.row(0);
  out.block(h + 1, 1, 1, w) = p.row(h - 1);
  out.col(0) = out.col(1);
  out.col(w + 1) = out.col(w);
  return out;
}

}  // namespace detail

/**
 * 3x3 Sobel cross-correlation with replicate padding.
 * Kx = [[-1,0,1],[-2,0,2],[-1,0,1]], Ky = Kx transposed.
 */
template <class T>
GradientMapT<T> sobel(const Plane<T>& p) {
  const auto h = p.rows(), w = p.cols();
  Plane<T> pd = detail::pad1_replicate(p);
  GradientMapT<T> g;
  auto b = [&](Eigen::Index u, Eigen::Index v) { return pd.block(u, v, h, w); };
  g.gx = (b(0, 2) + T(2) * b(1, 2) + b(2, 2)) - (b(0, 0) + T(2) * b(1, 0) + b(2, 0));
  g.gy = (b(2, 0) + T(2) * b(2, 1) + b(2, 2)) - (b(0, 0) + T(2) * b(0, 1) + b(0, 2));
  g.magnitude = (g.gx.square() + g.gy.square()).sqrt();
  return g;
}

// Discrete-sampled Gaussian, radius ceil(3*sigma), normalized to sum 1.
template <class T>
std::vector<T> gaussian_kernel(T sigma) {
  int r = static_cast<int>(std::ceil(3.0 * static_cast<double>(sigma)));
  std::vector<T> k(static_cast<size_t>(2 * r + 1));
  T sum = 0;
  for (int i = -r; i <= r; ++i) {
    T v = std::exp(-T(i) * T(i) / (T(2) * sigma * sigma));
    k[static_cast<size_t>(i + r)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace detail {

// Separable 1-D correlation along rows then columns, replicate padding.
template <class T>
Plane<T> separable_filter(const Plane<T>& p, const std::vector<T>& k) {
  const int h = static_cast<int>(p.rows()), w = static_cast<int>(p.cols());
  const int r = (static_cast<int>(k.size()) - 1) / 2;
  Plane<T> tmp(h, w);
  for (int i = 0; i < h; ++i) {
    const T* row = p.data() + static_cast<std::ptrdiff_t>(i) * w;
    T* out = tmp.data() + static_cast<std::ptrdiff_t>(i) * w;
    for (int j = 0; j < w; ++j) {
      T acc = 0;
      for (int t = -r; t <= r; ++t) {
        int jj = std::clamp(j + t, 0, w - 1);
        acc += k[static_cast<size_t>(t + r)] * row[jj];
      }
      out[j] = acc;
    }
  }
  Plane<T> out(h, w);
  for (int i = 0; i < h; ++i) {
    auto dst = out.row(i);
    dst = k[static_cast<size_t>(r)] * tmp.row(i);
    for (int t = 1; t <= r; ++t) {
      dst += k[static_cast<size_t>(r - t)] * tmp.row(std::max(i - t, 0));
      dst += k[static_cast<size_t>(r + t)] * tmp.row(std::min(i + t, h - 1));
    }
  }
  return out;
}

}  // namespace detail

template <class T>
Plane<T> gaussian_blur(const Plane<T>& p, T sigma) {
  require(sigma >= T(0), "gaussian_blur: sigma must be >= 0");
  if (sigma == T(0)) return p;
  return detail::separable_filter(p, gaussian_kernel(sigma));
}

inline Image gaussian_blur(const Image& img, float sigma) {
  require(sigma >= 0.0f, "gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0f) return img;
  Image out = img;
  auto k = gaussian_kernel(sigma);
  for (auto& p : out.planes) p = detail::separable_filter(p, k);
  return out;
}

// Binary dilation with a square structuring element of the given radius.
inline PlaneU8 dilate(const PlaneU8& m, int radius) {
  require(radius >= 0, "dilate: radius must be >= 0");
  if (radius == 0) return m;
  const int h = static_cast<int>(m.rows()), w = static_cast<int>(m.cols());
  PlaneU8 tmp(h, w), out(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      std::uint8_t v = 0;
      for (int t = std::max(j - radius, 0); t <= std::min(j + radius, w - 1) && !v; ++t)
        v = m(i, t);
      tmp(i, j) = v;
    }
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < h; ++i) {
      std::uint8_t v = 0;
      for (int t = std::max(i - radius, 0); t <= std::min(i + radius, h - 1) && !v; ++t)
        v = tmp(t, j);
      out(i, j) = v;
    }
  return out;
}

// Output bit = 1 iff >= 5 of the 9 cells in the 3x3 neighborhood (replicate
// border, center included) are 1.
inline PlaneU8 majority3x3(const PlaneU8& m) {
  const int h = static_cast<int>(m.rows()), w = static_cast<int>(m.cols());
  PlaneU8 out(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      int count = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          int ii = std::clamp(i + di, 0, h - 1);
          int jj = std::clamp(j + dj, 0, w - 1);
          count += m(ii, jj) ? 1 : 0;
        }
      out(i, j) = count >= 5 ? 1 : 0;
    }
  return out;
}

// Align-corners bilinear upsampling of a coarse grid to h x w.
template <class T>
Plane<T> bilinear_upsample(const Plane<T>& grid, int h, int w) {
  require(h >= 1 && w >= 1 && grid.rows() >= 1 && grid.cols() >= 1,
          "bilinear_upsample: bad dimensions");
  const int gh = static_cast<int>(grid.rows()), gw = static_cast<int>(grid.cols());
  Plane<T> out(h, w);
  const double sy = h > 1 ? double(gh - 1) / double(h - 1) : 0.0;
  const double sx = w > 1 ? double(gw - 1) / double(w - 1) : 0.0;
  for (int i = 0; i < h; ++i) {
    double fy = i * sy;
    int y0 = std::min(static_cast<int>(fy), gh - 1);
    int y1 = std::min(y0 + 1, gh - 1);
    T wy = static_cast<T>(fy - y0);
    for (int j = 0; j < w; ++j) {
      double fx = j * sx;
      int x0 = std::min(static_cast<int>(fx), gw - 1);
      int x1 = std::min(x0 + 1, gw - 1);
      T wx = static_cast<T>(fx - x0);
      T top = (T(1) - wx) * grid(y0, x0) + wx * grid(y0, x1);
      T bot = (T(1) - wx) * grid(y1, x0) + wx * grid(y1, x1);
      out(i, j) = (T(1) - wy) * top + wy * bot;
    }
  }
  return out;
}

}  // namespace reflkit
