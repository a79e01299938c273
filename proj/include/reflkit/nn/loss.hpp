// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/filters.hpp"
#include "reflkit/nn/tensor.hpp"

namespace reflkit::nn {

namespace detail {

template <class T>
T sgn(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

template <class T>
Eigen::Map<const Plane<T>> channel(const Tensor<T>& t, int in, int ic) {
  return {t.data.data() + ((static_cast<std::size_t>(in) * t.c + ic) * t.h) * t.w,
          t.h, t.w};
}

}  // namespace detail

// 2x2 mean pooling, stride 2, floor dims (odd tail rows/cols dropped).
template <class T>
Tensor<T> meanpool2(const Tensor<T>& x) {
  require(x.h >= 2 && x.w >= 2, "meanpool2: input too small");
  Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int ic = 0; ic < x.c; ++ic)
      for (int iy = 0; iy < y.h; ++iy)
        for (int ix = 0; ix < y.w; ++ix)
          y.at(in, ic, iy, ix) =
              (x.at(in, ic, 2 * iy, 2 * ix) + x.at(in, ic, 2 * iy, 2 * ix + 1) +
               x.at(in, ic, 2 * iy + 1, 2 * ix) + x.at(in, ic, 2 * iy + 1, 2 * ix + 1)) /
              T(4);
  return y;
}

template <class T>
void meanpool2_backward(const Tensor<T>& dy, Tensor<T>& dx_accum) {
  for (int in = 0; in < dy.n; ++in)
    for (int ic = 0; ic < dy.c; ++ic)
      for (int iy = 0; iy < dy.h; ++iy)
        for (int ix = 0; ix < dy.w; ++ix) {
          T g = dy.at(in, ic, iy, ix) / T(4);
          dx_accum.at(in, ic, 2 * iy, 2 * ix) += g;
          dx_accum.at(in, ic, 2 * iy, 2 * ix + 1) += g;
          dx_accum.at(in, ic, 2 * iy + 1, 2 * ix) += g;
          dx_accum.at(in, ic, 2 * iy + 1, 2 * ix + 1) += g;
        }
}

/**
 * Fixed perceptual feature stand-in: a 3-level pyramid built by repeated 2x2
 * mean pooling, with per-channel Sobel gradient magnitude (replicate padding)
 * as the feature map at each level. Deterministic, parameter-free, and
 * differentiable; constants vanish because the Sobel kernels are zero-sum.
 */
template <class T>
struct GradientPyramid {
  int levels = 3;

  struct Context {
    std::vector<Tensor<T>> x;              // x[0] = input, x[l+1] = meanpool2(x[l])
    std::vector<Tensor<T>> gx, gy, mag;    // per level
  };

  Context forward(const Tensor<T>& input) const {
    Context ctx;
    ctx.x.push_back(input);
    for (int l = 1; l < levels; ++l) ctx.x.push_back(meanpool2(ctx.x.back()));
    for (int l = 0; l < levels; ++l) {
      const Tensor<T>& xl = ctx.x[static_cast<std::size_t>(l)];
      Tensor<T> gx(xl.n, xl.c, xl.h, xl.w), gy = gx, mag = gx;
      for (int in = 0; in < xl.n; ++in)
        for (int ic = 0; ic < xl.c; ++ic) {
          Plane<T> p = detail::channel(xl, in, ic);
          auto g = sobel(p);
          std::size_t off = ((static_cast<std::size_t>(in) * xl.c + ic) * xl.h) * xl.w;
          std::copy_n(g.gx.data(), g.gx.size(), gx.data.data() + off);
          std::copy_n(g.gy.data(), g.gy.size(), gy.data.data() + off);
          std::copy_n(g.magnitude.data(), g.magnitude.size(), mag.data.data() + off);
        }
      ctx.gx.push_back(std::move(gx));
      ctx.gy.push_back(std::move(gy));
      ctx.mag.push_back(std::move(mag));
    }
    return ctx;
  }

  // Adjoint of the per-level magnitude maps back to the pyramid input.
  Tensor<T> backward(const Context& ctx, const std::vector<Tensor<T>>& dmag) const {
    std::vector<Tensor<T>> dx;
    for (const auto& xl : ctx.x) dx.emplace_back(xl.n, xl.c, xl.h, xl.w);
    for (int l = 0; l < levels; ++l) {
      const Tensor<T>& xl = ctx.x[static_cast<std::size_t>(l)];
      const Tensor<T>& dm = dmag[static_cast<std::size_t>(l)];
      for (int in = 0; in < xl.n; ++in)
        for (int ic = 0; ic < xl.c; ++ic)
          sobel_magnitude_adjoint(ctx, l, in, ic, dm, dx[static_cast<std::size_t>(l)]);
    }
    for (int l = levels - 1; l >= 1; --l)
      meanpool2_backward(dx[static_cast<std::size_t>(l)], dx[static_cast<std::size_t>(l - 1)]);
    return dx[0];
  }

 private:
  static void sobel_magnitude_adjoint(const Context& ctx, int l, int in, int ic,
                                      const Tensor<T>& dmag, Tensor<T>& dx) {
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    const Tensor<T>& gx = ctx.gx[static_cast<std::size_t>(l)];
    const Tensor<T>& gy = ctx.gy[static_cast<std::size_t>(l)];
    const Tensor<T>& mg = ctx.mag[static_cast<std::size_t>(l)];
    const int h = gx.h, w = gx.w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        T m = mg.at(in, ic, iy, ix);
        if (!(m > T(0))) continue;
        T dm = dmag.at(in, ic, iy, ix);
        if (dm == T(0)) continue;
        T dgx = dm * gx.at(in, ic, iy, ix) / m;
        T dgy = dm * gy.at(in, ic, iy, ix) / m;
        for (int u = 0; u < 3; ++u)
          for (int v = 0; v < 3; ++v) {
            int sy = std::clamp(iy + u - 1, 0, h - 1);
            int sx = std::clamp(ix + v - 1, 0, w - 1);
            dx.at(in, ic, sy, sx) += dgx * T(kx[u][v]) + dgy * T(ky[u][v]);
          }
      }
  }
};

/**
 * L_DNet = mean|M_hat - M| + gamma1 * mean over samples/channels of the
 * per-plane normalized TV of M_hat. L1 subgradient at 0 is 0. Gradients are
 * accumulated into *dmhat when non-null.
 */
template <class T>
T loss_dnet(const Tensor<T>& mhat, const Tensor<T>& m, T gamma1, Tensor<T>* dmhat = nullptr) {
  require(mhat.same_shape(m), "loss_dnet: shape mismatch");
  if (dmhat) require(dmhat->same_shape(mhat), "loss_dnet: gradient shape mismatch");
  const T inv = T(1) / static_cast<T>(mhat.size());
  double l1 = 0;
  for (std::size_t i = 0; i < mhat.size(); ++i) {
    T d = mhat.data[i] - m.data[i];
    l1 += std::abs(static_cast<double>(d));
    if (dmhat) dmhat->data[i] += detail::sgn(d) * inv;
  }
  double tv = 0;
  const T coef = gamma1 / (static_cast<T>(mhat.n) * mhat.c * mhat.h * mhat.w);
  for (int in = 0; in < mhat.n; ++in)
    for (int ic = 0; ic < mhat.c; ++ic) {
      for (int iy = 0; iy < mhat.h; ++iy)
        for (int ix = 0; ix + 1 < mhat.w; ++ix) {
          T d = mhat.at(in, ic, iy, ix + 1) - mhat.at(in, ic, iy, ix);
          tv += std::abs(static_cast<double>(d));
          if (dmhat) {
            T s = detail::sgn(d) * coef;
            dmhat->at(in, ic, iy, ix + 1) += s;
            dmhat->at(in, ic, iy, ix) -= s;
          }
        }
      for (int iy = 0; iy + 1 < mhat.h; ++iy)
        for (int ix = 0; ix < mhat.w; ++ix) {
          T d = mhat.at(in, ic, iy + 1, ix) - mhat.at(in, ic, iy, ix);
          tv += std::abs(static_cast<double>(d));
          if (dmhat) {
            T s = detail::sgn(d) * coef;
            dmhat->at(in, ic, iy + 1, ix) += s;
            dmhat->at(in, ic, iy, ix) -= s;
          }
        }
    }
  return static_cast<T>(l1 * inv +
                        static_cast<double>(gamma1) * tv /
                            (static_cast<double>(mhat.n) * mhat.c * mhat.h * mhat.w));
}

/**
 * L_RNet = mean|T_hat - T| + gamma2 * sum over pyramid levels of the mean
 * absolute feature difference. Only the T_hat branch receives gradients.
 */
template <class T, class Phi = GradientPyramid<T>>
T loss_rnet(const Tensor<T>& that, const Tensor<T>& t, T gamma2, Tensor<T>* dthat = nullptr,
            const Phi& phi = {}) {
  require(that.same_shape(t), "loss_rnet: shape mismatch");
  if (dthat) require(dthat->same_shape(that), "loss_rnet: gradient shape mismatch");
  const T inv = T(1) / static_cast<T>(that.size());
  double l1 = 0;
  for (std::size_t i = 0; i < that.size(); ++i) {
    T d = that.data[i] - t.data[i];
    l1 += std::abs(static_cast<double>(d));
    if (dthat) dthat->data[i] += detail::sgn(d) * inv;
  }
  double total = l1 * inv;

  auto ctx_hat = phi.forward(that);
  auto ctx_ref = phi.forward(t);
  std::vector<Tensor<T>> dmag;
  for (int l = 0; l < phi.levels; ++l) {
    const Tensor<T>& fh = ctx_hat.mag[static_cast<std::size_t>(l)];
    const Tensor<T>& fr = ctx_ref.mag[static_cast<std::size_t>(l)];
    const T linv = T(1) / static_cast<T>(fh.size());
    double acc = 0;
    Tensor<T> dm(fh.n, fh.c, fh.h, fh.w);
    for (std::size_t i = 0; i < fh.size(); ++i) {
      T d = fh.data[i] - fr.data[i];
      acc += std::abs(static_cast<double>(d));
      if (dthat) dm.data[i] = detail::sgn(d) * gamma2 * linv;
    }
    total += static_cast<double>(gamma2) * acc / static_cast<double>(fh.size());
    dmag.push_back(std::move(dm));
  }
  if (dthat) {
    Tensor<T> din = phi.backward(ctx_hat, dmag);
    for (std::size_t i = 0; i < dthat->size(); ++i) dthat->data[i] += din.data[i];
  }
  return static_cast<T>(total);
}

}  // namespace reflkit::nn
