// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/loss.hpp"
#include "reflkit/nn/net.hpp"

namespace reflkit::nn {

struct GradCheckOptions {
  double eps = 1e-3;
  int coords_per_tensor = 0;  // 0 = every coordinate
  std::uint64_t pick_seed = 1;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double fd = 0.0;
};

/**
 * Central finite differences against analytic gradients. The analytic side is
 * whatever the caller populated in ps's float gradient buffers; the
 * finite-difference side evaluates the supplied loss on a double copy of the
 * parameters (the production forward is templated, so the same code runs in
 * 64-bit, which keeps FD noise far below the tolerances being asserted).
 * Relative error uses denominator max(|analytic|, |fd|, 1e-6).
 */
/**
 * FNV-1a hash over the activity pattern of every non-smooth site in a
 * computation: relu supports, clamp regions, L1/TV signs, feature-difference
 * signs. Central differences only estimate a subgradient when both probes
 * evaluate on the same linear piece, so grad_check_pieces compares the
 * signatures of the two probes and redraws coordinates that straddle a kink.
 */
struct PieceSig {
  std::uint64_t h = 1469598103934665603ull;
  void bit(bool b) {
    h ^= b ? 0x9Eull : 0x31ull;
    h *= 1099511628211ull;
  }
  template <class T>
  void sign(T v) {
    bit(v > T(0));
    bit(v < T(0));
  }
};

// Post-activation supports of one relu layer (padded interior).
template <class T>
void sig_relu(PieceSig& s, const Padded<T>& act) {
  for (int in = 0; in < act.n; ++in)
    for (int iy = 0; iy < act.h; ++iy) {
      const T* row = act.at(in, iy, 0);
      const std::ptrdiff_t cnt = static_cast<std::ptrdiff_t>(act.w) * act.c;
      for (std::ptrdiff_t i = 0; i < cnt; ++i) s.bit(row[i] > T(0));
    }
}

template <class T>
void sig_rdnet(PieceSig& s, const RdWork<T>& ws) {
  sig_relu(s, ws.a);
  sig_relu(s, ws.t1);
  sig_relu(s, ws.r);
}

template <class T>
void sig_rrnet(PieceSig& s, const RrWork<T>& ws) {
  sig_relu(s, ws.a);
  sig_relu(s, ws.t1);
  sig_relu(s, ws.b1);
  sig_relu(s, ws.t2);
  sig_relu(s, ws.b2);
  for (const T v : ws.pre.data) {
    s.bit(v < T(0));
    s.bit(v > T(1));
  }
}

// Signs of the elementwise difference a - b (L1 terms).
template <class T>
void sig_l1(PieceSig& s, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.same_shape(b), "sig_l1: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) s.sign(a.data[i] - b.data[i]);
}

// Signs of the adjacent differences the smoothness term takes |.| of.
template <class T>
void sig_tv(PieceSig& s, const Tensor<T>& m) {
  for (int in = 0; in < m.n; ++in)
    for (int ic = 0; ic < m.c; ++ic) {
      for (int iy = 0; iy < m.h; ++iy)
        for (int ix = 0; ix + 1 < m.w; ++ix)
          s.sign(m.at(in, ic, iy, ix + 1) - m.at(in, ic, iy, ix));
      for (int iy = 0; iy + 1 < m.h; ++iy)
        for (int ix = 0; ix < m.w; ++ix)
          s.sign(m.at(in, ic, iy + 1, ix) - m.at(in, ic, iy, ix));
    }
}

// Feature-difference signs plus the hat-side magnitude supports per level.
// The reference features are probe-invariant; callers precompute them once.
template <class T>
void sig_pyramid_l1(PieceSig& s, const Tensor<T>& that,
                    const std::vector<Tensor<T>>& ref_mag) {
  GradientPyramid<T> phi{static_cast<int>(ref_mag.size())};
  const auto ch = phi.forward(that);
  for (std::size_t l = 0; l < ref_mag.size(); ++l) {
    const Tensor<T>& fh = ch.mag[l];
    const Tensor<T>& fr = ref_mag[l];
    for (std::size_t i = 0; i < fh.size(); ++i) {
      s.sign(fh.data[i] - fr.data[i]);
      s.bit(fh.data[i] > T(0));
    }
  }
}

template <class F64>  // double(ParamStore<double>&)
GradCheckReport grad_check(const ParamStore<float>& ps, F64&& loss64,
                           GradCheckOptions opt = {}) {
  ParamStore<double> pd = ps.template cast<double>();
  Rng pick(opt.pick_seed);
  GradCheckReport rep;
  for (std::size_t pi = 0; pi < ps.params.size(); ++pi) {
    const auto& [name, t] = ps.params[pi];
    require(t.grad.size() == t.size(), "grad_check: missing gradients for " + name);
    std::vector<std::size_t> coords;
    if (opt.coords_per_tensor <= 0 || static_cast<std::size_t>(opt.coords_per_tensor) >= t.size()) {
      coords.resize(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) coords[i] = i;
    } else {
      for (int i = 0; i < opt.coords_per_tensor; ++i)
        coords.push_back(pick.bounded(t.size()));
    }
    Tensor<double>& td = pd.params[pi].second;
    for (std::size_t idx : coords) {
      const double keep = td.data[idx];
      td.data[idx] = keep + opt.eps;
      const double lp = loss64(pd);
      td.data[idx] = keep - opt.eps;
      const double lm = loss64(pd);
      td.data[idx] = keep;
      const double fd = (lp - lm) / (2.0 * opt.eps);
      const double an = static_cast<double>(t.grad[idx]);
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name;
        rep.worst_index = idx;
        rep.analytic = an;
        rep.fd = fd;
      }
    }
  }
  return rep;
}

/**
 * grad_check with kink-straddle rejection for full-network graphs. The loss
 * functor additionally hashes its piece signature; when the +eps and -eps
 * probes land on different linear pieces, the secant does not measure the
 * subgradient the analytic side reports, so the window halves until both
 * probes share a piece (kinks have measure zero, and the 64-bit evaluation
 * keeps small-window FD noise orders of magnitude below the tolerance).
 * Coordinates still straddling after the shrink budget are redrawn; that only
 * changes which coordinates get sampled, so it cannot mask a gradient bug.
 */
template <class F64>  // double(ParamStore<double>&, PieceSig&)
GradCheckReport grad_check_pieces(const ParamStore<float>& ps, F64&& loss64,
                                  GradCheckOptions opt) {
  require(opt.coords_per_tensor > 0, "grad_check_pieces: needs a sample budget");
  ParamStore<double> pd = ps.template cast<double>();
  Rng pick(opt.pick_seed);
  GradCheckReport rep;
  for (std::size_t pi = 0; pi < ps.params.size(); ++pi) {
    const auto& [name, t] = ps.params[pi];
    require(t.grad.size() == t.size(), "grad_check: missing gradients for " + name);
    Tensor<double>& td = pd.params[pi].second;
    const int want = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(opt.coords_per_tensor), t.size()));
    int done = 0;
    for (int attempts = 0; done < want && attempts < want * 8; ++attempts) {
      const std::size_t idx = pick.bounded(t.size());
      const double keep = td.data[idx];
      double eps = opt.eps;
      double fd = 0.0;
      bool clean = false;
      for (int shrink = 0; shrink < 8; ++shrink, eps *= 0.5) {
        PieceSig sp, sm;
        td.data[idx] = keep + eps;
        const double lp = loss64(pd, sp);
        td.data[idx] = keep - eps;
        const double lm = loss64(pd, sm);
        if (sp.h == sm.h) {
          fd = (lp - lm) / (2.0 * eps);
          clean = true;
          break;
        }
      }
      td.data[idx] = keep;
      if (!clean) continue;
      ++done;
      const double an = static_cast<double>(t.grad[idx]);
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name;
        rep.worst_index = idx;
        rep.analytic = an;
        rep.fd = fd;
      }
    }
    require(done == want, "grad_check_pieces: no kink-free probes for " + name);
  }
  return rep;
}

}  // namespace reflkit::nn
