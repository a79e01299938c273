// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/tensor.hpp"

#ifdef __AVX512F__
#include <immintrin.h>
#endif

namespace reflkit::nn {

/**
 * Conv weights packed for the kernels: row k = tap*ci + cin (tap = ty*3 + tx,
 * row-major over the 3x3 window), each row co_pad floats wide (co rounded up
 * to 16, zero-filled). Both the vector and scalar kernels walk k ascending, so
 * per-output accumulation order is identical across paths.
 */
template <class T>
struct PackedW {
  int ci = 0, co = 0, co_pad = 0;
  std::vector<T, Eigen::aligned_allocator<T>> w;

  void resize(int ci_, int co_) {
    ci = ci_;
    co = co_;
    co_pad = (co_ + 15) & ~15;
    w.assign(static_cast<std::size_t>(9) * ci * co_pad, T(0));
  }
};

// Forward layout: w[(tap*ci + cin) * co_pad + cout] = W(cout, cin, ty, tx).
template <class T>
void pack_weights_fwd(const Tensor<T>& W, PackedW<T>& pk) {
  require(W.h == 3 && W.w == 3, "pack_weights_fwd: need 3x3 kernels");
  pk.resize(W.c, W.n);
  for (int co = 0; co < W.n; ++co)
    for (int ci = 0; ci < W.c; ++ci)
      for (int tap = 0; tap < 9; ++tap)
        pk.w[static_cast<std::size_t>(tap * W.c + ci) * pk.co_pad + co] =
            W.at(co, ci, tap / 3, tap % 3);
}

/**
 * Input-gradient layout: dX is a convolution of dY with channel-transposed,
 * spatially flipped kernels, so rows are indexed by (tap, cout) and columns
 * by cin: w[(tap*co + cout) * ci_pad + cin] = W(cout, cin, flipped tap).
 */
template <class T>
void pack_weights_dx(const Tensor<T>& W, PackedW<T>& pk) {
  require(W.h == 3 && W.w == 3, "pack_weights_dx: need 3x3 kernels");
  pk.resize(W.n, W.c);
  for (int tap = 0; tap < 9; ++tap)
    for (int co = 0; co < W.n; ++co)
      for (int ci = 0; ci < W.c; ++ci)
        pk.w[static_cast<std::size_t>(tap * W.n + co) * pk.co_pad + ci] =
            W.at(co, ci, (8 - tap) / 3, (8 - tap) % 3);
}

enum class Fuse { none, relu };

namespace detail {

template <class T>
void conv3x3_generic(const Padded<T>& x, const PackedW<T>& wk, const T* bias,
                     Padded<T>& y, Fuse fuse, const Padded<T>* skip,
                     const Padded<T>* gate) {
  const int ci = wk.ci, co = wk.co;
  const std::ptrdiff_t rs = x.row_stride();
  for (int in = 0; in < x.n; ++in)
    for (int iy = 0; iy < x.h; ++iy) {
      const T* xrow = x.at(in, iy, 0);
      T* yrow = y.at(in, iy, 0);
      const T* srow = skip ? skip->at(in, iy, 0) : nullptr;
      const T* grow = gate ? gate->at(in, iy, 0) : nullptr;
      for (int ix = 0; ix < x.w; ++ix) {
        const T* xp = xrow + static_cast<std::ptrdiff_t>(ix) * ci;
        for (int oc = 0; oc < co; ++oc) {
          T acc = bias ? bias[oc] : T(0);
          int k = 0;
          for (int tap = 0; tap < 9; ++tap) {
            const T* xt = xp + (tap / 3 - 1) * rs + (tap % 3 - 1) * ci;
            for (int c = 0; c < ci; ++c, ++k) acc += wk.w[static_cast<std::size_t>(k) * wk.co_pad + oc] * xt[c];
          }
          if (srow) acc += srow[static_cast<std::ptrdiff_t>(ix) * co + oc];
          if (fuse == Fuse::relu && acc < T(0)) acc = T(0);
          if (grow && !(grow[static_cast<std::ptrdiff_t>(ix) * co + oc] > T(0))) acc = T(0);
          yrow[static_cast<std::ptrdiff_t>(ix) * co + oc] = acc;
        }
      }
    }
}

template <class T>
void conv3x3_dw_generic(const Padded<T>& x, const Padded<T>& dy, Tensor<T>& Wgrad,
                        Tensor<T>& bgrad) {
  const int ci = x.c, co = dy.c;
  const std::ptrdiff_t rs = x.row_stride();
  for (int in = 0; in < x.n; ++in)
    for (int iy = 0; iy < x.h; ++iy) {
      const T* xrow = x.at(in, iy, 0);
      const T* dyrow = dy.at(in, iy, 0);
      for (int ix = 0; ix < x.w; ++ix) {
        const T* xp = xrow + static_cast<std::ptrdiff_t>(ix) * ci;
        const T* dyp = dyrow + static_cast<std::ptrdiff_t>(ix) * co;
        for (int oc = 0; oc < co; ++oc) {
          const T g = dyp[oc];
          bgrad.grad[static_cast<std::size_t>(oc)] += g;
          for (int tap = 0; tap < 9; ++tap) {
            const T* xt = xp + (tap / 3 - 1) * rs + (tap % 3 - 1) * ci;
            T* wg = Wgrad.grad.data() +
                    ((static_cast<std::size_t>(oc) * ci) * 9 + tap);
            for (int c = 0; c < ci; ++c) wg[static_cast<std::size_t>(c) * 9] += g * xt[c];
          }
        }
      }
    }
}

#ifdef __AVX512F__

/**
 * One register tile: MR pixels x NCOL zmm output columns. Compile-time bounds
 * keep the accumulators in registers (24 zmm max for 12x2). Tiles with
 * valid < MR still compute all MR pixels (reads land in the ring/guard) and
 * mask the stores, so the inner loop has no data-dependent branches.
 */
template <int MR, int NCOL>
inline void conv3x3_avx_block(const float* const xtap[9], int ci, std::ptrdiff_t cx,
                              const float* wrows, int co_pad, const float* bias, int co,
                              float* ybase, std::ptrdiff_t cy, int valid,
                              Fuse fuse, const float* sbase, const float* gbase) {
  __m512 acc[MR][NCOL];
  for (int r = 0; r < MR; ++r)
    for (int col = 0; col < NCOL; ++col) acc[r][col] = _mm512_setzero_ps();

  const float* wr = wrows;
  for (int tap = 0; tap < 9; ++tap) {
    const float* xt = xtap[tap];
    for (int c = 0; c < ci; ++c, wr += co_pad) {
      __m512 w0 = _mm512_load_ps(wr);
      __m512 w1;
      if (NCOL == 2) w1 = _mm512_load_ps(wr + 16);
      const float* xc = xt + c;
      for (int r = 0; r < MR; ++r) {
        __m512 b = _mm512_set1_ps(xc[r * cx]);
        acc[r][0] = _mm512_fmadd_ps(b, w0, acc[r][0]);
        if (NCOL == 2) acc[r][1] = _mm512_fmadd_ps(b, w1, acc[r][1]);
      }
    }
  }

  const __mmask16 tail =
      co >= NCOL * 16 ? __mmask16(0xFFFF) : __mmask16((1u << (co - (NCOL - 1) * 16)) - 1u);
  __m512 b0, b1;
  if (bias) {
    b0 = _mm512_loadu_ps(bias);
    if (NCOL == 2) b1 = _mm512_loadu_ps(bias + 16);
  }
  const __m512 zero = _mm512_setzero_ps();
  for (int r = 0; r < MR; ++r) {
    if (r >= valid) break;
    for (int col = 0; col < NCOL; ++col) {
      __m512 v = acc[r][col];
      if (bias) v = _mm512_add_ps(v, col == 0 ? b0 : b1);
      if (sbase) v = _mm512_add_ps(v, _mm512_loadu_ps(sbase + r * cy + col * 16));
      if (fuse == Fuse::relu) v = _mm512_max_ps(v, zero);
      if (gbase) {
        __mmask16 gm = _mm512_cmp_ps_mask(_mm512_loadu_ps(gbase + r * cy + col * 16), zero,
                                          _CMP_GT_OQ);
        v = _mm512_maskz_mov_ps(gm, v);
      }
      __mmask16 m = col == NCOL - 1 ? tail : __mmask16(0xFFFF);
      _mm512_mask_storeu_ps(ybase + r * cy + col * 16, m, v);
    }
  }
}

/**
 * co <= 4 and ci <= 32: input channels ride in lanes and each output is one
 * horizontal sum, so nothing is spent on unused output lanes. Weights are
 * restaged per tap row to mirror the three contiguous taps of x (left, center,
 * right = 3*ci floats), zero-padded so overread lanes contribute nothing.
 */
template <int CO>
inline void conv3x3_smallco_impl(const Padded<float>& x, const PackedW<float>& wk,
                                 const float* bias, Padded<float>& y, Fuse fuse,
                                 const Padded<float>* skip, const Padded<float>* gate) {
  const int ci = wk.ci;
  const int nb3 = (3 * ci + 15) / 16;  // zmm loads per tap row
  alignas(64) float wbuf[CO][3][96] = {};
  for (int oc = 0; oc < CO; ++oc)
    for (int tap = 0; tap < 9; ++tap)
      for (int c = 0; c < ci; ++c)
        wbuf[oc][tap / 3][(tap % 3) * ci + c] =
            wk.w[static_cast<std::size_t>(tap * ci + c) * wk.co_pad + oc];

  const std::ptrdiff_t rs = x.row_stride(), cy = y.c;
  for (int in = 0; in < x.n; ++in)
    for (int iy = 0; iy < x.h; ++iy) {
      const float* xm = x.at(in, iy, -1);
      float* yrow = y.at(in, iy, 0);
      const float* srow = skip ? skip->at(in, iy, 0) : nullptr;
      const float* grow = gate ? gate->at(in, iy, 0) : nullptr;
      for (int ix = 0; ix < x.w; ++ix) {
        const float* xp = xm + static_cast<std::ptrdiff_t>(ix) * ci;
        __m512 acc[CO];
        for (int oc = 0; oc < CO; ++oc) acc[oc] = _mm512_setzero_ps();
        for (int dy = 0; dy < 3; ++dy) {
          const float* xr = xp + (dy - 1) * rs;
          for (int b = 0; b < nb3; ++b) {
            __m512 xv = _mm512_loadu_ps(xr + b * 16);
            for (int oc = 0; oc < CO; ++oc)
              acc[oc] = _mm512_fmadd_ps(xv, _mm512_load_ps(wbuf[oc][dy] + b * 16), acc[oc]);
          }
        }
        for (int oc = 0; oc < CO; ++oc) {
          float v = _mm512_reduce_add_ps(acc[oc]);
          if (bias) v += bias[oc];
          if (srow) v += srow[static_cast<std::ptrdiff_t>(ix) * cy + oc];
          if (fuse == Fuse::relu && v < 0.0f) v = 0.0f;
          if (grow && !(grow[static_cast<std::ptrdiff_t>(ix) * cy + oc] > 0.0f)) v = 0.0f;
          yrow[static_cast<std::ptrdiff_t>(ix) * cy + oc] = v;
        }
      }
    }
}

inline void conv3x3_smallco_avx(const Padded<float>& x, const PackedW<float>& wk,
                                const float* bias, Padded<float>& y, Fuse fuse,
                                const Padded<float>* skip, const Padded<float>* gate) {
  switch (wk.co) {
    case 1: conv3x3_smallco_impl<1>(x, wk, bias, y, fuse, skip, gate); break;
    case 2: conv3x3_smallco_impl<2>(x, wk, bias, y, fuse, skip, gate); break;
    case 3: conv3x3_smallco_impl<3>(x, wk, bias, y, fuse, skip, gate); break;
    default: conv3x3_smallco_impl<4>(x, wk, bias, y, fuse, skip, gate); break;
  }
}

inline void conv3x3_avx(const Padded<float>& x, const PackedW<float>& wk, const float* bias,
                        Padded<float>& y, Fuse fuse, const Padded<float>* skip,
                        const Padded<float>* gate) {
  const int ci = wk.ci, co = wk.co;
  const std::ptrdiff_t cy = y.c;
  // Bias rows must be readable as two zmm loads even for tiny co.
  alignas(64) float biasbuf[32] = {};
  if (bias)
    for (int i = 0; i < co; ++i) biasbuf[i] = bias[i];
  const float* bb = bias ? biasbuf : nullptr;
  // Tiny-ci convs amortize the tile epilogue worse; the 8-wide tile wins there.
  const bool wide = ci > 8;
  for (int in = 0; in < x.n; ++in)
    for (int iy = 0; iy < x.h; ++iy) {
      int x0 = 0;
      while (x0 < x.w) {
        const int rem = x.w - x0;
        const int step = co <= 16 ? 16 : (wide && rem > 8 ? 12 : 8);
        const float* xtap[9];
        for (int tap = 0; tap < 9; ++tap)
          xtap[tap] = x.at(in, iy + tap / 3 - 1, x0 + tap % 3 - 1);
        float* ybase = y.at(in, iy, x0);
        const float* sbase = skip ? skip->at(in, iy, x0) : nullptr;
        const float* gbase = gate ? gate->at(in, iy, x0) : nullptr;
        if (co <= 16)
          conv3x3_avx_block<16, 1>(xtap, ci, ci, wk.w.data(), wk.co_pad, bb, co, ybase, cy,
                                   rem, fuse, sbase, gbase);
        else if (step == 12)
          conv3x3_avx_block<12, 2>(xtap, ci, ci, wk.w.data(), wk.co_pad, bb, co, ybase, cy,
                                   rem, fuse, sbase, gbase);
        else
          conv3x3_avx_block<8, 2>(xtap, ci, ci, wk.w.data(), wk.co_pad, bb, co, ybase, cy,
                                  rem, fuse, sbase, gbase);
        x0 += step;
      }
    }
}

/**
 * One row's contribution to a block of 12 consecutive k = tap*bc + c rows of
 * scratch: acc[r][col] += bcast[px + off[r]] * lanes[px][col], px left to
 * right, then added into the k-th scratch row. off entries past the true K
 * point at offset 0; their partials land in scratch rows nobody reads.
 */
template <int NCOL>
inline void conv3x3_dw_row(const float* brow, int wpx, int bc, const float* lrow,
                           int lane_pad, const std::ptrdiff_t* off, int kpad,
                           float* scratch) {
  for (int k0 = 0; k0 < kpad; k0 += 12) {
    __m512 acc[12][NCOL];
    for (int r = 0; r < 12; ++r)
      for (int col = 0; col < NCOL; ++col) acc[r][col] = _mm512_setzero_ps();
    const std::ptrdiff_t* o = off + k0;
    const float* bp = brow;
    const float* lp = lrow;
    for (int ix = 0; ix < wpx; ++ix, bp += bc, lp += lane_pad) {
      __m512 d0 = _mm512_loadu_ps(lp);
      __m512 d1;
      if (NCOL == 2) d1 = _mm512_loadu_ps(lp + 16);
      for (int r = 0; r < 12; ++r) {
        __m512 b = _mm512_set1_ps(bp[o[r]]);
        acc[r][0] = _mm512_fmadd_ps(b, d0, acc[r][0]);
        if (NCOL == 2) acc[r][1] = _mm512_fmadd_ps(b, d1, acc[r][1]);
      }
    }
    float* dst = scratch + static_cast<std::size_t>(k0) * lane_pad;
    for (int r = 0; r < 12; ++r, dst += lane_pad)
      for (int col = 0; col < NCOL; ++col) {
        __m512 v = _mm512_add_ps(_mm512_load_ps(dst + col * 16), acc[r][col]);
        _mm512_store_ps(dst + col * 16, v);
      }
  }
}

/**
 * bc == 16, single lane column: one register tile covers a whole tap, so the
 * broadcast addresses become fixed displacements instead of per-k offsets
 * loaded from memory (which otherwise saturate the load ports).
 */
inline void conv3x3_dw_row_tap16(const float* brow, int wpx, const float* lrow,
                                 const std::ptrdiff_t* dtap, float* scratch) {
  for (int tap = 0; tap < 9; ++tap) {
    __m512 acc[16];
    for (int r = 0; r < 16; ++r) acc[r] = _mm512_setzero_ps();
    const float* bp = brow + dtap[tap];
    const float* lp = lrow;
    for (int ix = 0; ix < wpx; ++ix, bp += 16, lp += 16) {
      __m512 d0 = _mm512_loadu_ps(lp);
      for (int r = 0; r < 16; ++r)
        acc[r] = _mm512_fmadd_ps(_mm512_set1_ps(bp[r]), d0, acc[r]);
    }
    float* dst = scratch + static_cast<std::size_t>(tap) * 16 * 16;
    for (int r = 0; r < 16; ++r, dst += 16)
      _mm512_store_ps(dst, _mm512_add_ps(_mm512_load_ps(dst), acc[r]));
  }
}

/**
 * dW[oc][cin][tap] = sum over pixels of x(shifted by tap)[cin] * dy[oc]. The
 * sum is symmetric in (x, dy) up to flipping the tap, so the kernel broadcasts
 * whichever tensor gives the smaller k extent and keeps the other in lanes;
 * with co << ci (final convs) that cuts the padded-lane waste by ~K/K'. Row
 * partials accumulate into a kpad x lane_pad scratch, then scatter into the
 * canonical (co, ci, 3, 3) gradient.
 */
inline void conv3x3_dw_avx(const Padded<float>& x, const Padded<float>& dy,
                           Tensor<float>& Wgrad, Tensor<float>& bgrad,
                           std::vector<float, Eigen::aligned_allocator<float>>& scratch) {
  const int ci = x.c, co = dy.c;
  const auto ceil12 = [](int v) { return (v + 11) / 12 * 12; };
  const auto ceil16 = [](int v) { return (v + 15) & ~15; };
  const bool swap = ceil12(9 * co) * ceil16(ci) < ceil12(9 * ci) * ceil16(co);
  const Padded<float>& bcast = swap ? dy : x;
  const Padded<float>& lanes = swap ? x : dy;
  const int bc = bcast.c, lc = lanes.c;
  const int K = 9 * bc;
  const int kpad = ceil12(K);
  const int lane_pad = ceil16(lc);
  const int ncol = lane_pad / 16;
  scratch.assign(static_cast<std::size_t>(kpad) * lane_pad, 0.0f);

  const std::ptrdiff_t rs = bcast.row_stride();
  const bool tap16 = bc == 16 && lane_pad == 16;
  std::ptrdiff_t dtap[9];
  for (int tap = 0; tap < 9; ++tap) dtap[tap] = (tap / 3 - 1) * rs + (tap % 3 - 1) * bc;
  std::vector<std::ptrdiff_t> off(static_cast<std::size_t>(kpad), 0);
  for (int k = 0; k < K; ++k) off[static_cast<std::size_t>(k)] = dtap[k / bc] + k % bc;

  // Row staging keeps lane reads aligned zmm loads even when lc < lane_pad.
  std::vector<float, Eigen::aligned_allocator<float>> rowbuf;
  if (lc != lane_pad) rowbuf.assign(static_cast<std::size_t>(x.w) * lane_pad, 0.0f);

  for (int in = 0; in < x.n; ++in)
    for (int iy = 0; iy < x.h; ++iy) {
      const float* brow = bcast.at(in, iy, 0);
      const float* lrow = lanes.at(in, iy, 0);
      if (lc != lane_pad) {
        for (int ix = 0; ix < x.w; ++ix)
          std::memcpy(rowbuf.data() + static_cast<std::size_t>(ix) * lane_pad,
                      lrow + static_cast<std::ptrdiff_t>(ix) * lc,
                      static_cast<std::size_t>(lc) * sizeof(float));
        lrow = rowbuf.data();
      }
      if (tap16)
        conv3x3_dw_row_tap16(brow, x.w, lrow, dtap, scratch.data());
      else if (ncol == 1)
        conv3x3_dw_row<1>(brow, x.w, bc, lrow, lane_pad, off.data(), kpad, scratch.data());
      else
        conv3x3_dw_row<2>(brow, x.w, bc, lrow, lane_pad, off.data(), kpad, scratch.data());
    }

  // Bias gradient: lane-parallel when dy's stride is zmm-friendly.
  if (co == 16 || co == 32) {
    __m512 bacc0 = _mm512_setzero_ps(), bacc1 = _mm512_setzero_ps();
    for (int in = 0; in < dy.n; ++in)
      for (int iy = 0; iy < dy.h; ++iy) {
        const float* dyp = dy.at(in, iy, 0);
        for (int ix = 0; ix < dy.w; ++ix, dyp += co) {
          bacc0 = _mm512_add_ps(bacc0, _mm512_loadu_ps(dyp));
          if (co == 32) bacc1 = _mm512_add_ps(bacc1, _mm512_loadu_ps(dyp + 16));
        }
      }
    alignas(64) float bsum[32];
    _mm512_store_ps(bsum, bacc0);
    _mm512_store_ps(bsum + 16, bacc1);
    for (int oc = 0; oc < co; ++oc) bgrad.grad[static_cast<std::size_t>(oc)] += bsum[oc];
  } else {
    for (int in = 0; in < dy.n; ++in)
      for (int iy = 0; iy < dy.h; ++iy) {
        const float* dyp = dy.at(in, iy, 0);
        for (int ix = 0; ix < dy.w; ++ix, dyp += co)
          for (int oc = 0; oc < co; ++oc) bgrad.grad[static_cast<std::size_t>(oc)] += dyp[oc];
      }
  }

  if (!swap) {
    for (int tap = 0; tap < 9; ++tap)
      for (int c = 0; c < ci; ++c) {
        const float* src = scratch.data() + static_cast<std::size_t>(tap * ci + c) * lane_pad;
        for (int oc = 0; oc < co; ++oc)
          Wgrad.grad[((static_cast<std::size_t>(oc) * ci + c) * 9) + tap] += src[oc];
      }
  } else {
    for (int tap = 0; tap < 9; ++tap)
      for (int oc = 0; oc < co; ++oc) {
        const float* src = scratch.data() + static_cast<std::size_t>(tap * co + oc) * lane_pad;
        for (int c = 0; c < ci; ++c)
          Wgrad.grad[((static_cast<std::size_t>(oc) * ci + c) * 9) + (8 - tap)] += src[c];
      }
  }
}

#endif  // __AVX512F__

}  // namespace detail

/**
 * y = conv3x3(x) + bias (+ skip), optional fused relu, stride 1, zero padding
 * 1 (the padded ring supplies the zeros). gate, when given, zeroes outputs
 * where gate <= 0 (used to fuse the relu mask into input-gradient stores).
 */
template <class T>
void conv3x3_fwd(const Padded<T>& x, const PackedW<T>& wk, const T* bias, Padded<T>& y,
                 Fuse fuse = Fuse::none, const Padded<T>* skip = nullptr,
                 const Padded<T>* gate = nullptr) {
  require(x.c == wk.ci && y.c == wk.co && x.n == y.n && x.h == y.h && x.w == y.w,
          "conv3x3_fwd: shape mismatch");
  detail::conv3x3_generic(x, wk, bias, y, fuse, skip, gate);
}

#ifdef __AVX512F__
inline void conv3x3_fwd(const Padded<float>& x, const PackedW<float>& wk, const float* bias,
                        Padded<float>& y, Fuse fuse = Fuse::none,
                        const Padded<float>* skip = nullptr,
                        const Padded<float>* gate = nullptr) {
  require(x.c == wk.ci && y.c == wk.co && x.n == y.n && x.h == y.h && x.w == y.w,
          "conv3x3_fwd: shape mismatch");
  if (wk.co > 32) {
    detail::conv3x3_generic(x, wk, bias, y, fuse, skip, gate);
    return;
  }
  if (wk.co <= 4 && wk.ci <= 32) {
    detail::conv3x3_smallco_avx(x, wk, bias, y, fuse, skip, gate);
    return;
  }
  detail::conv3x3_avx(x, wk, bias, y, fuse, skip, gate);
}
#endif

// Accumulates weight and bias gradients (canonical (co, ci, 3, 3) layout).
template <class T>
void conv3x3_dw(const Padded<T>& x, const Padded<T>& dy, Tensor<T>& Wgrad, Tensor<T>& bgrad) {
  require(x.n == dy.n && x.h == dy.h && x.w == dy.w, "conv3x3_dw: shape mismatch");
  require(Wgrad.n == dy.c && Wgrad.c == x.c, "conv3x3_dw: weight shape mismatch");
  detail::conv3x3_dw_generic(x, dy, Wgrad, bgrad);
}

#ifdef __AVX512F__
inline void conv3x3_dw(const Padded<float>& x, const Padded<float>& dy, Tensor<float>& Wgrad,
                       Tensor<float>& bgrad,
                       std::vector<float, Eigen::aligned_allocator<float>>& scratch) {
  require(x.n == dy.n && x.h == dy.h && x.w == dy.w, "conv3x3_dw: shape mismatch");
  require(Wgrad.n == dy.c && Wgrad.c == x.c, "conv3x3_dw: weight shape mismatch");
  if (dy.c > 32) {
    detail::conv3x3_dw_generic(x, dy, Wgrad, bgrad);
    return;
  }
  detail::conv3x3_dw_avx(x, dy, Wgrad, bgrad, scratch);
}
#endif

}  // namespace reflkit::nn
