// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/filters.hpp"

namespace reflkit {

// Binary per-pixel map; 0 or 1 per cell.
using ReflectionMask = PlaneU8;

struct MaxRFOptions {
  float margin = 0.02f;          // comparison must exceed this to set a bit
  float pre_blur_sigma = 1.0f;   // Gaussian pre-blur of the luma planes
  enum class Smooth { none, majority3x3 } smooth = Smooth::majority3x3;

  // All robustness knobs off: the bare strict-inequality comparison.
  static MaxRFOptions exact_eq1() { return {0.0f, 0.0f, Smooth::none}; }
};

struct MaxRFResult {
  ReflectionMask mask;
  PlaneF comparison;  // G_I - G_T before thresholding
};

/**
 * Maximum Reflection Filter: compares Sobel gradient magnitudes of the
 * (optionally pre-blurred) luma planes of a reflection image I and its
 * aligned transmission T. bits = 1 iff G_I - G_T > margin, then the optional
 * 3x3 majority-vote cleanup.
 */
inline MaxRFResult maxrf(const Image& I, const Image& T, const MaxRFOptions& opts = {}) {
  require(I.same_shape(T), "maxrf: dimension mismatch");
  require(opts.margin >= 0.0f && opts.pre_blur_sigma >= 0.0f, "maxrf: bad options");
  PlaneF gi = sobel(gaussian_blur(to_grayscale(I), opts.pre_blur_sigma)).magnitude;
  PlaneF gt = sobel(gaussian_blur(to_grayscale(T), opts.pre_blur_sigma)).magnitude;
  MaxRFResult r;
  r.comparison = gi - gt;
  r.mask = (r.comparison > opts.margin).cast<std::uint8_t>();
  if (opts.smooth == MaxRFOptions::Smooth::majority3x3) r.mask = majority3x3(r.mask);
  return r;
}

struct MaskMetrics {
  double precision = 1.0;
  double recall = 1.0;
  double iou = 1.0;
};

/**
 * Precision is tolerant to small localization error: the reference is dilated
 * by a square element of the given radius for the precision count only.
 * Recall and IoU use the undilated reference. All 0/0 cases are defined as 1.
 */
inline MaskMetrics mask_metrics(const ReflectionMask& pred, const ReflectionMask& ref,
                                int dilate_radius) {
  require(pred.rows() == ref.rows() && pred.cols() == ref.cols(),
          "mask_metrics: dimension mismatch");
  ReflectionMask ref_dil = dilate(ref, dilate_radius);
  long tp_dil = ((pred != 0) && (ref_dil != 0)).count();
  long tp = ((pred != 0) && (ref != 0)).count();
  long np = (pred != 0).count();
  long nr = (ref != 0).count();
  long uni = ((pred != 0) || (ref != 0)).count();
  MaskMetrics m;
  m.precision = np == 0 ? 1.0 : double(tp_dil) / double(np);
  m.recall = nr == 0 ? 1.0 : double(tp) / double(nr);
  m.iou = uni == 0 ? 1.0 : double(tp) / double(uni);
  return m;
}

// Anisotropic total variation (forward differences), normalized by pixel count.
template <class T>
T tv_norm(const Plane<T>& p) {
  const auto h = p.rows(), w = p.cols();
  T acc = 0;
  if (w > 1) acc += (p.rightCols(w - 1) - p.leftCols(w - 1)).abs().sum();
  if (h > 1) acc += (p.bottomRows(h - 1) - p.topRows(h - 1)).abs().sum();
  return acc / static_cast<T>(h * w);
}

// |G_I - G_T| on luma Sobel magnitudes; the "double edge" visualization plane.
inline PlaneF gradient_difference_map(const Image& I, const Image& T) {
  require(I.same_shape(T), "gradient_difference_map: dimension mismatch");
  return (sobel(to_grayscale(I)).magnitude - sobel(to_grayscale(T)).magnitude).abs();
}

struct AlignmentReport {
  Shift best_shift;
  double ncc_at_zero = 0.0;
  double ncc_at_best = 0.0;
  bool aligned = true;
  PlaneF diff_map;
};

namespace detail {

// Mean-removed NCC between a(i,j) and b(i+dy, j+dx) over their overlap.
// Constant overlap (zero variance) scores 0.
inline double ncc_at_shift(const PlaneF& a, const PlaneF& b, int dx, int dy) {
  const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
  const int oh = y1 - y0, ow = x1 - x0;
  if (oh < 1 || ow < 1) return 0.0;
  Eigen::ArrayXXd av = a.block(y0, x0, oh, ow).cast<double>();
  Eigen::ArrayXXd bv = b.block(y0 + dy, x0 + dx, oh, ow).cast<double>();
  av -= av.mean();
  bv -= bv.mean();
  double den = std::sqrt(av.square().sum() * bv.square().sum());
  if (den == 0.0) return 0.0;
  return (av * bv).sum() / den;
}

}  // namespace detail

/**
 * Integer-shift NCC search over Sobel-magnitude planes. best_shift is the
 * argmax with ties broken toward (0,0), then lexicographically in (dx, dy).
 * aligned = best_shift == (0,0) or the improvement over zero shift is <= delta.
 */
inline AlignmentReport alignment_score(const Image& I, const Image& T, int max_shift = 3,
                                       double delta = 0.02) {
  require(I.same_shape(T), "alignment_score: dimension mismatch");
  require(max_shift >= 1, "alignment_score: max_shift must be >= 1");
  require(I.height() > max_shift && I.width() > max_shift,
          "alignment_score: image too small for the shift window");
  PlaneF ga = sobel(to_grayscale(T)).magnitude;
  PlaneF gb = sobel(to_grayscale(I)).magnitude;

  AlignmentReport rep;
  rep.ncc_at_zero = detail::ncc_at_shift(ga, gb, 0, 0);
  rep.best_shift = {0, 0};
  rep.ncc_at_best = rep.ncc_at_zero;
  for (int dx = -max_shift; dx <= max_shift; ++dx)
    for (int dy = -max_shift; dy <= max_shift; ++dy) {
      if (dx == 0 && dy == 0) continue;
      double v = detail::ncc_at_shift(ga, gb, dx, dy);
      if (v > rep.ncc_at_best) {
        rep.ncc_at_best = v;
        rep.best_shift = {dx, dy};
      }
    }
  rep.aligned = (rep.best_shift.dx == 0 && rep.best_shift.dy == 0) ||
                (rep.ncc_at_best - rep.ncc_at_zero) <= delta;
  rep.diff_map = gradient_difference_map(I, T);
  return rep;
}

}  // namespace reflkit
