// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/convcore.hpp"

namespace reflkit::nn {

/**
 * 3x3 cross-correlation, stride 1, zero padding 1. weight is (co, ci, 3, 3),
 * bias is (co, 1, 1, 1). Output spatial dims equal the input's.
 */
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(weight.h == 3 && weight.w == 3, "conv2d: need 3x3 kernels");
  require(weight.c == x.c, "conv2d: channel mismatch");
  require(bias.n == weight.n, "conv2d: bias/weight mismatch");
  Padded<T> xp(x.n, x.c, x.h, x.w), yp(x.n, weight.n, x.h, x.w);
  pack(x, xp);
  PackedW<T> wk;
  pack_weights_fwd(weight, wk);
  conv3x3_fwd(xp, wk, bias.data.data(), yp);
  Tensor<T> y(x.n, weight.n, x.h, x.w);
  unpack(yp, y);
  return y;
}

template <class T>
struct Conv2dGrads {
  Tensor<T> dx, dweight, dbias;
};

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                               const Tensor<T>& dy) {
  require(dy.n == x.n && dy.c == weight.n && dy.h == x.h && dy.w == x.w,
          "conv2d_backward: shape mismatch");
  Conv2dGrads<T> g;
  g.dx = Tensor<T>(x.n, x.c, x.h, x.w);
  g.dweight = Tensor<T>(weight.n, weight.c, 3, 3);
  g.dweight.ensure_grad();
  g.dbias = Tensor<T>(weight.n, 1, 1, 1);
  g.dbias.ensure_grad();

  Padded<T> dyp(dy.n, dy.c, dy.h, dy.w), dxp(x.n, x.c, x.h, x.w), xp(x.n, x.c, x.h, x.w);
  pack(dy, dyp);
  pack(x, xp);
  PackedW<T> wkdx;
  pack_weights_dx(weight, wkdx);
  conv3x3_fwd(dyp, wkdx, nullptr, dxp);
  unpack(dxp, g.dx);
  conv3x3_dw(xp, dyp, g.dweight, g.dbias);
  g.dweight.data = g.dweight.grad;
  g.dbias.data = g.dbias.grad;
  g.dweight.grad.clear();
  g.dbias.grad.clear();
  return g;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

// Subgradient at exactly 0 is 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require(x.same_shape(dy), "relu_backward: shape mismatch");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(x.data[i] > T(0))) dx.data[i] = T(0);
  return dx;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = T(1) / (T(1) + std::exp(-v));
  return y;
}

// Takes the forward output y, not the pre-activation.
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  require(y.same_shape(dy), "sigmoid_backward: shape mismatch");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (T(1) - y.data[i]);
  return dx;
}

// Channel stacking [a; b]: a's channels first.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.n == b.n && a.h == b.h && a.w == b.w, "concat_channels: shape mismatch");
  Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
  const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
  for (int in = 0; in < a.n; ++in) {
    std::copy_n(a.data.data() + static_cast<std::size_t>(in) * a.c * plane, a.c * plane,
                y.data.data() + static_cast<std::size_t>(in) * y.c * plane);
    std::copy_n(b.data.data() + static_cast<std::size_t>(in) * b.c * plane, b.c * plane,
                y.data.data() + (static_cast<std::size_t>(in) * y.c + a.c) * plane);
  }
  return y;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> concat_channels_backward(const Tensor<T>& dy, int ca, int cb) {
  require(dy.c == ca + cb, "concat_channels_backward: channel mismatch");
  Tensor<T> da(dy.n, ca, dy.h, dy.w), db(dy.n, cb, dy.h, dy.w);
  const std::size_t plane = static_cast<std::size_t>(dy.h) * dy.w;
  for (int in = 0; in < dy.n; ++in) {
    std::copy_n(dy.data.data() + static_cast<std::size_t>(in) * dy.c * plane, ca * plane,
                da.data.data() + static_cast<std::size_t>(in) * ca * plane);
    std::copy_n(dy.data.data() + (static_cast<std::size_t>(in) * dy.c + ca) * plane, cb * plane,
                db.data.data() + static_cast<std::size_t>(in) * cb * plane);
  }
  return {da, db};
}

template <class T>
Tensor<T> clamp01(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = std::clamp(v, T(0), T(1));
  return y;
}

// Pass-through on the closed interval [0, 1] of the pre-clamp value, 0 outside.
template <class T>
Tensor<T> clamp01_backward(const Tensor<T>& x_pre, const Tensor<T>& dy) {
  require(x_pre.same_shape(dy), "clamp01_backward: shape mismatch");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (x_pre.data[i] < T(0) || x_pre.data[i] > T(1)) dx.data[i] = T(0);
  return dx;
}

}  // namespace reflkit::nn
