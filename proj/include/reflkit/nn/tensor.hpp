// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/core.hpp"

#include <Eigen/Core>

#include <cstring>
#include <string>
#include <vector>

namespace reflkit::nn {

/**
 * Dense NCHW tensor. data is exactly n*c*h*w scalars in NCHW order; grad,
 * when allocated, matches. This is the public face of the toy networks;
 * the conv kernels use the padded workspace layout below internally.
 */
template <class T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;
  std::vector<T> grad;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, bool with_grad = false)
      : n(n_), c(c_), h(h_), w(w_) {
    require(n >= 1 && c >= 1 && h >= 1 && w >= 1, "Tensor: bad shape");
    data.assign(size(), T(0));
    if (with_grad) grad.assign(size(), T(0));
  }

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }

  T& at(int in, int ic, int iy, int ix) {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  T at(int in, int ic, int iy, int ix) const {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  T& gat(int in, int ic, int iy, int ix) {
    return grad[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  void ensure_grad() {
    if (grad.size() != size()) grad.assign(size(), T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(n, c, h, w);
    for (std::size_t i = 0; i < size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

/**
 * Activation buffer in NHWC layout with a one-pixel zero ring per sample and
 * a trailing guard slab, so every 3x3 tap of every interior pixel is a plain
 * pointer offset. The ring is written once (zeros at allocation) and interior
 * stores never touch it, which is exactly the zero-padding the convolutions
 * need. Address of (in, iy, ix, c): ((in*(h+2) + iy+1)*(w+2) + ix+1)*cpad + c.
 */
template <class T>
struct Padded {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T, Eigen::aligned_allocator<T>> buf;

  Padded() = default;
  Padded(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    // Trailing guard covers the vector kernels' bounded overreads/overwrites
    // past the last interior pixel (masked stores still touch full lanes).
    buf.assign(static_cast<std::size_t>(n) * (h + 2) * (w + 2) * c + 16 * c + 64, T(0));
  }

  std::ptrdiff_t row_stride() const { return static_cast<std::ptrdiff_t>(w + 2) * c; }

  T* at(int in, int iy, int ix) {
    return buf.data() +
           ((static_cast<std::size_t>(in) * (h + 2) + iy + 1) * (w + 2) + ix + 1) * c;
  }
  const T* at(int in, int iy, int ix) const {
    return buf.data() +
           ((static_cast<std::size_t>(in) * (h + 2) + iy + 1) * (w + 2) + ix + 1) * c;
  }

  void zero_interior() {
    for (int in = 0; in < n; ++in)
      for (int iy = 0; iy < h; ++iy)
        std::memset(at(in, iy, 0), 0, static_cast<std::size_t>(w) * c * sizeof(T));
  }
};

// NCHW tensor -> padded NHWC interior.
template <class T>
void pack(const Tensor<T>& t, Padded<T>& p) {
  require(t.n == p.n && t.c == p.c && t.h == p.h && t.w == p.w, "pack: shape mismatch");
  for (int in = 0; in < t.n; ++in)
    for (int ic = 0; ic < t.c; ++ic) {
      const T* src = t.data.data() + ((static_cast<std::size_t>(in) * t.c + ic) * t.h) * t.w;
      for (int iy = 0; iy < t.h; ++iy) {
        T* dst = p.at(in, iy, 0) + ic;
        const T* s = src + static_cast<std::size_t>(iy) * t.w;
        for (int ix = 0; ix < t.w; ++ix) dst[static_cast<std::size_t>(ix) * t.c] = s[ix];
      }
    }
}

// Copies t's channels into p starting at channel offset c0.
template <class T>
void pack_channels(const Tensor<T>& t, Padded<T>& p, int c0) {
  require(t.n == p.n && t.h == p.h && t.w == p.w && c0 + t.c <= p.c,
          "pack_channels: shape mismatch");
  for (int in = 0; in < t.n; ++in)
    for (int ic = 0; ic < t.c; ++ic) {
      const T* src = t.data.data() + ((static_cast<std::size_t>(in) * t.c + ic) * t.h) * t.w;
      for (int iy = 0; iy < t.h; ++iy) {
        T* dst = p.at(in, iy, 0) + c0 + ic;
        const T* s = src + static_cast<std::size_t>(iy) * t.w;
        for (int ix = 0; ix < t.w; ++ix) dst[static_cast<std::size_t>(ix) * p.c] = s[ix];
      }
    }
}

// Extracts t.c channels starting at offset c0 of p into t.
template <class T>
void unpack_channels(const Padded<T>& p, int c0, Tensor<T>& t) {
  require(t.n == p.n && t.h == p.h && t.w == p.w && c0 + t.c <= p.c,
          "unpack_channels: shape mismatch");
  for (int in = 0; in < t.n; ++in)
    for (int ic = 0; ic < t.c; ++ic) {
      T* dst = t.data.data() + ((static_cast<std::size_t>(in) * t.c + ic) * t.h) * t.w;
      for (int iy = 0; iy < t.h; ++iy) {
        const T* src = p.at(in, iy, 0) + c0 + ic;
        T* d = dst + static_cast<std::size_t>(iy) * t.w;
        for (int ix = 0; ix < t.w; ++ix) d[ix] = src[static_cast<std::size_t>(ix) * p.c];
      }
    }
}

// Padded NHWC interior -> NCHW tensor (shape taken from t).
template <class T>
void unpack(const Padded<T>& p, Tensor<T>& t) {
  require(t.n == p.n && t.c == p.c && t.h == p.h && t.w == p.w, "unpack: shape mismatch");
  for (int in = 0; in < t.n; ++in)
    for (int ic = 0; ic < t.c; ++ic) {
      T* dst = t.data.data() + ((static_cast<std::size_t>(in) * t.c + ic) * t.h) * t.w;
      for (int iy = 0; iy < t.h; ++iy) {
        const T* src = p.at(in, iy, 0) + ic;
        T* d = dst + static_cast<std::size_t>(iy) * t.w;
        for (int ix = 0; ix < t.w; ++ix) d[ix] = src[static_cast<std::size_t>(ix) * t.c];
      }
    }
}

}  // namespace reflkit::nn
