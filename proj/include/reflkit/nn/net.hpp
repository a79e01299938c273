// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/ops.hpp"

#include <deque>
#include <string>

namespace reflkit::nn {

/**
 * Named trainable tensors in a fixed definition order (rdnet.* then rrnet.*).
 * Every parameter carries a gradient buffer. Storage is a deque so references
 * returned by add() stay valid across later adds.
 */
template <class T>
struct ParamStore {
  std::deque<std::pair<std::string, Tensor<T>>> params;
  std::uint64_t init_seed = 0;
  std::string init_scheme;

  Tensor<T>& add(const std::string& name, int n, int c, int h, int w) {
    require(!has(name), "ParamStore: duplicate parameter " + name);
    params.emplace_back(name, Tensor<T>(n, c, h, w, true));
    return params.back().second;
  }
  bool has(const std::string& name) const {
    for (const auto& [n, t] : params)
      if (n == name) return true;
    return false;
  }
  Tensor<T>& at(const std::string& name) {
    for (auto& [n, t] : params)
      if (n == name) return t;
    throw std::runtime_error("ParamStore: unknown parameter " + name);
  }
  const Tensor<T>& at(const std::string& name) const {
    for (const auto& [n, t] : params)
      if (n == name) return t;
    throw std::runtime_error("ParamStore: unknown parameter " + name);
  }
  void zero_grads() {
    for (auto& [n, t] : params) t.zero_grad();
  }
  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    out.init_seed = init_seed;
    out.init_scheme = init_scheme;
    for (const auto& [n, t] : params) {
      out.params.emplace_back(n, t.template cast<U>());
      out.params.back().second.ensure_grad();
    }
    return out;
  }
};

namespace detail {

template <class T>
void kaiming_fill(Tensor<T>& w, Rng& rng) {
  const double sd = std::sqrt(2.0 / (static_cast<double>(w.c) * w.h * w.w));
  for (auto& v : w.data) v = static_cast<T>(rng.normal() * sd);
}

template <class T>
void add_conv(ParamStore<T>& ps, const std::string& prefix, int co, int ci, Rng& rng,
              bool zero_init) {
  auto& w = ps.add(prefix + ".w", co, ci, 3, 3);
  if (!zero_init) kaiming_fill(w, rng);
  ps.add(prefix + ".b", co, 1, 1, 1);
}

// dst += src over the interiors (same shape).
template <class T>
void add_into(Padded<T>& dst, const Padded<T>& src) {
  for (int in = 0; in < dst.n; ++in)
    for (int iy = 0; iy < dst.h; ++iy) {
      T* d = dst.at(in, iy, 0);
      const T* s = src.at(in, iy, 0);
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dst.w) * dst.c; ++i)
        d[i] += s[i];
    }
}

// dst = (dst + extra) * (act > 0); extra may be null.
template <class T>
void gate_relu(Padded<T>& dst, const Padded<T>* extra, const Padded<T>& act) {
  for (int in = 0; in < dst.n; ++in)
    for (int iy = 0; iy < dst.h; ++iy) {
      T* d = dst.at(in, iy, 0);
      const T* e = extra ? extra->at(in, iy, 0) : nullptr;
      const T* a = act.at(in, iy, 0);
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dst.w) * dst.c; ++i) {
        T v = e ? d[i] + e[i] : d[i];
        d[i] = a[i] > T(0) ? v : T(0);
      }
    }
}

template <class T>
struct DwScratch {
  std::vector<float, Eigen::aligned_allocator<float>> buf;
};

template <class T>
void dw_dispatch(const Padded<T>& x, const Padded<T>& dy, Tensor<T>& wg, Tensor<T>& bg,
                 [[maybe_unused]] DwScratch<T>& scratch) {
#ifdef __AVX512F__
  if constexpr (std::is_same_v<T, float>) {
    conv3x3_dw(x, dy, wg, bg, scratch.buf);
    return;
  }
#endif
  conv3x3_dw(x, dy, wg, bg);
}

}  // namespace detail

inline constexpr int kRdHidden = 16;
inline constexpr int kRrHidden = 32;

/**
 * RDNet: conv(3->16)+relu -> residual block (out = relu(conv_b(relu(conv_a(x)))
 * + x)) -> conv(16->1) -> sigmoid. Hidden convs are Kaiming fan-in normal,
 * biases zero; the final conv is zero-initialized so the fresh net outputs 0.5.
 */
template <class T>
void rdnet_init(ParamStore<T>& ps, Rng& rng) {
  detail::add_conv(ps, "rdnet.conv_in", kRdHidden, 3, rng, false);
  detail::add_conv(ps, "rdnet.block1.conv_a", kRdHidden, kRdHidden, rng, false);
  detail::add_conv(ps, "rdnet.block1.conv_b", kRdHidden, kRdHidden, rng, false);
  detail::add_conv(ps, "rdnet.conv_out", 1, kRdHidden, rng, true);
}

/**
 * RRNet: conv(4->32)+relu -> two residual blocks -> conv(32->3);
 * T_hat = clamp01(I + out). Final conv zero-initialized (residual identity).
 */
template <class T>
void rrnet_init(ParamStore<T>& ps, Rng& rng) {
  detail::add_conv(ps, "rrnet.conv_in", kRrHidden, 4, rng, false);
  detail::add_conv(ps, "rrnet.block1.conv_a", kRrHidden, kRrHidden, rng, false);
  detail::add_conv(ps, "rrnet.block1.conv_b", kRrHidden, kRrHidden, rng, false);
  detail::add_conv(ps, "rrnet.block2.conv_a", kRrHidden, kRrHidden, rng, false);
  detail::add_conv(ps, "rrnet.block2.conv_b", kRrHidden, kRrHidden, rng, false);
  detail::add_conv(ps, "rrnet.conv_out", 3, kRrHidden, rng, true);
}

template <class T>
void cascade_init(ParamStore<T>& ps, Rng& rng) {
  rdnet_init(ps, rng);
  rrnet_init(ps, rng);
  ps.init_scheme = "kaiming-fan-in, zero final convs";
}

template <class T>
struct RdWork {
  int n = 0, h = 0, w = 0;
  Padded<T> x, a, t1, r, m;
  Padded<T> d1, d2, d3, dm;
  PackedW<T> win, wa, wb, wout, wa_dx, wb_dx, wout_dx;
  detail::DwScratch<T> scratch;
  Tensor<T> mhat;  // sigmoid output, (n, 1, h, w)

  void resize(int n_, int h_, int w_) {
    if (n == n_ && h == h_ && w == w_) return;
    n = n_;
    h = h_;
    w = w_;
    x.resize(n, 3, h, w);
    a.resize(n, kRdHidden, h, w);
    t1.resize(n, kRdHidden, h, w);
    r.resize(n, kRdHidden, h, w);
    m.resize(n, 1, h, w);
    d1.resize(n, kRdHidden, h, w);
    d2.resize(n, kRdHidden, h, w);
    d3.resize(n, kRdHidden, h, w);
    dm.resize(n, 1, h, w);
    mhat = Tensor<T>(n, 1, h, w);
  }
};

template <class T>
const Tensor<T>& rdnet_forward(const ParamStore<T>& ps, const Tensor<T>& I, RdWork<T>& ws) {
  require(I.c == 3, "rdnet_forward: input must have 3 channels");
  ws.resize(I.n, I.h, I.w);
  pack(I, ws.x);
  pack_weights_fwd(ps.at("rdnet.conv_in.w"), ws.win);
  pack_weights_fwd(ps.at("rdnet.block1.conv_a.w"), ws.wa);
  pack_weights_fwd(ps.at("rdnet.block1.conv_b.w"), ws.wb);
  pack_weights_fwd(ps.at("rdnet.conv_out.w"), ws.wout);
  conv3x3_fwd(ws.x, ws.win, ps.at("rdnet.conv_in.b").data.data(), ws.a, Fuse::relu);
  conv3x3_fwd(ws.a, ws.wa, ps.at("rdnet.block1.conv_a.b").data.data(), ws.t1, Fuse::relu);
  conv3x3_fwd(ws.t1, ws.wb, ps.at("rdnet.block1.conv_b.b").data.data(), ws.r, Fuse::relu,
              &ws.a);
  conv3x3_fwd(ws.r, ws.wout, ps.at("rdnet.conv_out.b").data.data(), ws.m, Fuse::none);
  unpack(ws.m, ws.mhat);
  for (auto& v : ws.mhat.data) v = T(1) / (T(1) + std::exp(-v));
  return ws.mhat;
}

// Accumulates parameter gradients for dL/dM_hat (sigmoid output gradient).
template <class T>
void rdnet_backward(ParamStore<T>& ps, const Tensor<T>& dmhat, RdWork<T>& ws) {
  Tensor<T> dpre = dmhat;
  for (std::size_t i = 0; i < dpre.size(); ++i)
    dpre.data[i] *= ws.mhat.data[i] * (T(1) - ws.mhat.data[i]);
  pack(dpre, ws.dm);

  pack_weights_dx(ps.at("rdnet.conv_out.w"), ws.wout_dx);
  pack_weights_dx(ps.at("rdnet.block1.conv_b.w"), ws.wb_dx);
  pack_weights_dx(ps.at("rdnet.block1.conv_a.w"), ws.wa_dx);

  detail::dw_dispatch(ws.r, ws.dm, ps.at("rdnet.conv_out.w"), ps.at("rdnet.conv_out.b"),
                      ws.scratch);
  conv3x3_fwd(ws.dm, ws.wout_dx, nullptr, ws.d1, Fuse::none, nullptr, &ws.r);  // dz of block out
  detail::dw_dispatch(ws.t1, ws.d1, ps.at("rdnet.block1.conv_b.w"),
                      ps.at("rdnet.block1.conv_b.b"), ws.scratch);
  conv3x3_fwd(ws.d1, ws.wb_dx, nullptr, ws.d2, Fuse::none, nullptr, &ws.t1);  // dt1
  detail::dw_dispatch(ws.a, ws.d2, ps.at("rdnet.block1.conv_a.w"),
                      ps.at("rdnet.block1.conv_a.b"), ws.scratch);
  conv3x3_fwd(ws.d2, ws.wa_dx, nullptr, ws.d3, Fuse::none);  // da via conv path
  detail::gate_relu(ws.d3, &ws.d1, ws.a);                    // (+ skip) through a's relu
  detail::dw_dispatch(ws.x, ws.d3, ps.at("rdnet.conv_in.w"), ps.at("rdnet.conv_in.b"),
                      ws.scratch);
}

template <class T>
struct RrWork {
  int n = 0, h = 0, w = 0;
  Padded<T> x4, a, t1, b1, t2, b2, o;
  Padded<T> d1, d2, d3, dof, dx4;
  PackedW<T> win, wa1, wb1, wa2, wb2, wout;
  PackedW<T> win_dx, wa1_dx, wb1_dx, wa2_dx, wb2_dx, wout_dx;
  detail::DwScratch<T> scratch;
  Tensor<T> pre;    // I + conv output before clamping
  Tensor<T> that;   // clamp01(pre)
  Tensor<T> dmhat;  // gradient into the mask input (valid when detach=false)

  void resize(int n_, int h_, int w_) {
    if (n == n_ && h == h_ && w == w_) return;
    n = n_;
    h = h_;
    w = w_;
    x4.resize(n, 4, h, w);
    a.resize(n, kRrHidden, h, w);
    t1.resize(n, kRrHidden, h, w);
    b1.resize(n, kRrHidden, h, w);
    t2.resize(n, kRrHidden, h, w);
    b2.resize(n, kRrHidden, h, w);
    o.resize(n, 3, h, w);
    d1.resize(n, kRrHidden, h, w);
    d2.resize(n, kRrHidden, h, w);
    d3.resize(n, kRrHidden, h, w);
    dof.resize(n, 3, h, w);
    dx4.resize(n, 4, h, w);
    pre = Tensor<T>(n, 3, h, w);
    that = Tensor<T>(n, 3, h, w);
    dmhat = Tensor<T>(n, 1, h, w);
  }
};

template <class T>
const Tensor<T>& rrnet_forward(const ParamStore<T>& ps, const Tensor<T>& I,
                               const Tensor<T>& mhat, RrWork<T>& ws) {
  require(I.c == 3 && mhat.c == 1 && I.n == mhat.n && I.h == mhat.h && I.w == mhat.w,
          "rrnet_forward: shape mismatch");
  ws.resize(I.n, I.h, I.w);
  pack_channels(I, ws.x4, 0);
  pack_channels(mhat, ws.x4, 3);
  pack_weights_fwd(ps.at("rrnet.conv_in.w"), ws.win);
  pack_weights_fwd(ps.at("rrnet.block1.conv_a.w"), ws.wa1);
  pack_weights_fwd(ps.at("rrnet.block1.conv_b.w"), ws.wb1);
  pack_weights_fwd(ps.at("rrnet.block2.conv_a.w"), ws.wa2);
  pack_weights_fwd(ps.at("rrnet.block2.conv_b.w"), ws.wb2);
  pack_weights_fwd(ps.at("rrnet.conv_out.w"), ws.wout);
  conv3x3_fwd(ws.x4, ws.win, ps.at("rrnet.conv_in.b").data.data(), ws.a, Fuse::relu);
  conv3x3_fwd(ws.a, ws.wa1, ps.at("rrnet.block1.conv_a.b").data.data(), ws.t1, Fuse::relu);
  conv3x3_fwd(ws.t1, ws.wb1, ps.at("rrnet.block1.conv_b.b").data.data(), ws.b1, Fuse::relu,
              &ws.a);
  conv3x3_fwd(ws.b1, ws.wa2, ps.at("rrnet.block2.conv_a.b").data.data(), ws.t2, Fuse::relu);
  conv3x3_fwd(ws.t2, ws.wb2, ps.at("rrnet.block2.conv_b.b").data.data(), ws.b2, Fuse::relu,
              &ws.b1);
  conv3x3_fwd(ws.b2, ws.wout, ps.at("rrnet.conv_out.b").data.data(), ws.o, Fuse::none);
  unpack(ws.o, ws.pre);
  for (std::size_t i = 0; i < ws.pre.size(); ++i) ws.pre.data[i] += I.data[i];
  ws.that = ws.pre;
  for (auto& v : ws.that.data) v = std::clamp(v, T(0), T(1));
  return ws.that;
}

/**
 * Accumulates parameter gradients for dL/dT_hat. When detach is false the
 * gradient reaching the concatenated mask channel is left in ws.dmhat for the
 * caller to feed into rdnet_backward.
 */
template <class T>
void rrnet_backward(ParamStore<T>& ps, const Tensor<T>& dthat, RrWork<T>& ws, bool detach) {
  Tensor<T> dout = dthat;
  for (std::size_t i = 0; i < dout.size(); ++i)
    if (ws.pre.data[i] < T(0) || ws.pre.data[i] > T(1)) dout.data[i] = T(0);
  pack(dout, ws.dof);

  pack_weights_dx(ps.at("rrnet.conv_out.w"), ws.wout_dx);
  pack_weights_dx(ps.at("rrnet.block2.conv_b.w"), ws.wb2_dx);
  pack_weights_dx(ps.at("rrnet.block2.conv_a.w"), ws.wa2_dx);
  pack_weights_dx(ps.at("rrnet.block1.conv_b.w"), ws.wb1_dx);
  pack_weights_dx(ps.at("rrnet.block1.conv_a.w"), ws.wa1_dx);

  detail::dw_dispatch(ws.b2, ws.dof, ps.at("rrnet.conv_out.w"), ps.at("rrnet.conv_out.b"),
                      ws.scratch);
  conv3x3_fwd(ws.dof, ws.wout_dx, nullptr, ws.d1, Fuse::none, nullptr, &ws.b2);  // dz2
  detail::dw_dispatch(ws.t2, ws.d1, ps.at("rrnet.block2.conv_b.w"),
                      ps.at("rrnet.block2.conv_b.b"), ws.scratch);
  conv3x3_fwd(ws.d1, ws.wb2_dx, nullptr, ws.d2, Fuse::none, nullptr, &ws.t2);  // dt2
  detail::dw_dispatch(ws.b1, ws.d2, ps.at("rrnet.block2.conv_a.w"),
                      ps.at("rrnet.block2.conv_a.b"), ws.scratch);
  conv3x3_fwd(ws.d2, ws.wa2_dx, nullptr, ws.d3, Fuse::none);
  detail::gate_relu(ws.d3, &ws.d1, ws.b1);  // dz1
  detail::dw_dispatch(ws.t1, ws.d3, ps.at("rrnet.block1.conv_b.w"),
                      ps.at("rrnet.block1.conv_b.b"), ws.scratch);
  conv3x3_fwd(ws.d3, ws.wb1_dx, nullptr, ws.d2, Fuse::none, nullptr, &ws.t1);  // dt1
  detail::dw_dispatch(ws.a, ws.d2, ps.at("rrnet.block1.conv_a.w"),
                      ps.at("rrnet.block1.conv_a.b"), ws.scratch);
  conv3x3_fwd(ws.d2, ws.wa1_dx, nullptr, ws.d1, Fuse::none);
  detail::gate_relu(ws.d1, &ws.d3, ws.a);  // d(conv_in pre-activation)
  detail::dw_dispatch(ws.x4, ws.d1, ps.at("rrnet.conv_in.w"), ps.at("rrnet.conv_in.b"),
                      ws.scratch);
  if (!detach) {
    pack_weights_dx(ps.at("rrnet.conv_in.w"), ws.win_dx);
    conv3x3_fwd(ws.d1, ws.win_dx, nullptr, ws.dx4, Fuse::none);
    unpack_channels(ws.dx4, 3, ws.dmhat);
  }
}

}  // namespace reflkit::nn
