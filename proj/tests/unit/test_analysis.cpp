// SPDX-License-Identifier: Apache-2.0
#include "reflkit/analysis.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace reflkit;

namespace {

// Independent direct evaluation of the comparison rule: double arithmetic,
// clamp-indexed taps, no shared code with the library path.
double oracle_luma(const Image& img, int i, int j) {
  if (img.channels() == 1) return img.planes[0](i, j);
  return 0.299 * img.planes[0](i, j) + 0.587 * img.planes[1](i, j) +
         0.114 * img.planes[2](i, j);
}

double oracle_sobel_mag(const Image& img, int i, int j) {
  const int h = img.height(), w = img.width();
  auto at = [&](int y, int x) {
    return oracle_luma(img, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  const double gx = (at(i - 1, j + 1) + 2.0 * at(i, j + 1) + at(i + 1, j + 1)) -
                    (at(i - 1, j - 1) + 2.0 * at(i, j - 1) + at(i + 1, j - 1));
  const double gy = (at(i + 1, j - 1) + 2.0 * at(i + 1, j) + at(i + 1, j + 1)) -
                    (at(i - 1, j - 1) + 2.0 * at(i - 1, j) + at(i - 1, j + 1));
  return std::sqrt(gx * gx + gy * gy);
}

ReflectionMask oracle_exact_mask(const Image& I, const Image& T) {
  ReflectionMask m(I.height(), I.width());
  for (int i = 0; i < I.height(); ++i)
    for (int j = 0; j < I.width(); ++j)
      m(i, j) = oracle_sobel_mag(I, i, j) > oracle_sobel_mag(T, i, j) ? 1 : 0;
  return m;
}

// Smooth bright bump added to one channel; zero outside its support box.
Image add_bump(const Image& base, int cy, int cx, int radius, float height) {
  Image out = base;
  for (int i = 0; i < out.height(); ++i)
    for (int j = 0; j < out.width(); ++j) {
      const double d2 = double(i - cy) * (i - cy) + double(j - cx) * (j - cx);
      if (d2 < double(radius) * radius) {
        const float v = height * static_cast<float>(1.0 - d2 / (double(radius) * radius));
        for (auto& p : out.planes) p(i, j) = std::min(p(i, j) + v, 1.0f);
      }
    }
  return out;
}

}  // namespace

TEST_CASE("maxrf identity pair yields the empty mask") {
  Rng rng(4);
  const Image t = testutil::noise_image(16, 16, 3, rng);
  const MaxRFResult r = maxrf(t, t, MaxRFOptions::exact_eq1());
  CHECK((r.mask != 0).count() == 0);
  CHECK(r.comparison.abs().maxCoeff() == 0.0f);
}

TEST_CASE("maxrf exact mode matches the direct oracle on a hand fixture") {
  // 4x4 ramp with one raised pixel; every bit checked against the oracle.
  Image t(4, 4, 1, Encoding::srgb);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t.planes[0](i, j) = 0.1f * static_cast<float>(j);
  Image i_img = t;
  i_img.planes[0](1, 2) += 0.5f;

  const MaxRFResult r = maxrf(i_img, t, MaxRFOptions::exact_eq1());
  const ReflectionMask want = oracle_exact_mask(i_img, t);
  CHECK((r.mask == want).all());
  // Both Sobel kernels weight the stencil center zero, so the raised pixel
  // leaves its own gradient untouched while boosting its neighbors.
  CHECK(r.mask(1, 2) == 0);
  CHECK(r.mask(1, 1) == 1);
  CHECK(r.mask(0, 2) == 1);
  // The raised pixel's stencil never reaches (3,0): those gradients tie, bit 0.
  CHECK(r.mask(3, 0) == 0);
  CHECK((r.mask != 0).count() > 0);
}

TEST_CASE("maxrf localizes a blurred disc against flat gray") {
  const Image t = testutil::constant_image(24, 24, 3, 0.5f);
  Image disc = t;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j)
      if ((i - 12) * (i - 12) + (j - 12) * (j - 12) < 25) disc.planes[0](i, j) += 0.4f;
  Image i_img(24, 24, 3, Encoding::srgb);
  for (int c = 0; c < 3; ++c)
    i_img.planes[static_cast<std::size_t>(c)] =
        gaussian_blur(disc.planes[static_cast<std::size_t>(c)], 1.5f);

  // Exact mode must agree with the oracle wherever the margin is decisive.
  // Pixels within 1e-5 of a tie sit inside float rounding noise and are skipped.
  const MaxRFResult r = maxrf(i_img, t, MaxRFOptions::exact_eq1());
  int confident = 0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const double d = oracle_sobel_mag(i_img, i, j) - oracle_sobel_mag(t, i, j);
      if (d > 1e-5) {
        CHECK(r.mask(i, j) == 1);
        ++confident;
      } else if (d < -1e-5) {
        CHECK(r.mask(i, j) == 0);
      }
    }
  CHECK(confident > 0);

  // With the default margin the positives form a ring on the disc's gradient
  // support and nowhere else.
  const ReflectionMask ring = maxrf(i_img, t).mask;
  CHECK((ring != 0).count() > 0);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j)
      if (ring(i, j))
        CHECK((i - 12) * (i - 12) + (j - 12) * (j - 12) <= 11 * 11);
}

TEST_CASE("maxrf mutual exclusion") {
  Rng rng(21);
  const Image t = testutil::noise_image(20, 20, 3, rng, 0.2f, 0.6f);
  const Image i_img = add_bump(t, 10, 10, 6, 0.3f);
  SUBCASE("exact mode masks are disjoint") {
    const ReflectionMask a = maxrf(i_img, t, MaxRFOptions::exact_eq1()).mask;
    const ReflectionMask b = maxrf(t, i_img, MaxRFOptions::exact_eq1()).mask;
    CHECK(((a != 0) && (b != 0)).count() == 0);
  }
  SUBCASE("default options stay disjoint through the majority vote") {
    const ReflectionMask a = maxrf(i_img, t).mask;
    const ReflectionMask b = maxrf(t, i_img).mask;
    CHECK(((a != 0) && (b != 0)).count() == 0);
  }
}

TEST_CASE("maxrf margin monotonicity and constant-offset invariance") {
  Rng rng(22);
  const Image t = testutil::noise_image(24, 24, 3, rng, 0.2f, 0.5f);
  const Image i_img = add_bump(t, 12, 12, 7, 0.25f);
  SUBCASE("larger margins shrink the positive set") {
    MaxRFOptions lo{0.01f, 1.0f, MaxRFOptions::Smooth::none};
    MaxRFOptions hi{0.05f, 1.0f, MaxRFOptions::Smooth::none};
    const ReflectionMask ml = maxrf(i_img, t, lo).mask;
    const ReflectionMask mh = maxrf(i_img, t, hi).mask;
    CHECK(((mh != 0) && (ml == 0)).count() == 0);
    CHECK((ml != 0).count() >= (mh != 0).count());
  }
  SUBCASE("shifting both images by a constant leaves the mask bit-identical") {
    Image i2 = i_img, t2 = t;
    for (auto& p : i2.planes) p += 0.1f;
    for (auto& p : t2.planes) p += 0.1f;
    CHECK((maxrf(i2, t2, MaxRFOptions::exact_eq1()).mask ==
           maxrf(i_img, t, MaxRFOptions::exact_eq1()).mask)
              .all());
    CHECK((maxrf(i2, t2).mask == maxrf(i_img, t).mask).all());
  }
}

TEST_CASE("maxrf rejects mismatched shapes") {
  const Image a = testutil::constant_image(8, 8, 3, 0.5f);
  const Image b = testutil::constant_image(8, 9, 3, 0.5f);
  CHECK_THROWS_AS(maxrf(a, b), std::runtime_error);
}

TEST_CASE("mask_metrics conventions and the shifted-square fixture") {
  SUBCASE("identical masks score ones") {
    ReflectionMask m = ReflectionMask::Zero(20, 20);
    m.block(5, 5, 6, 6).setConstant(1);
    const MaskMetrics r = mask_metrics(m, m, 2);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.iou == 1.0);
  }
  SUBCASE("empty prediction keeps precision 1 by convention") {
    ReflectionMask ref = ReflectionMask::Zero(10, 10);
    ref(3, 3) = 1;
    const MaskMetrics r = mask_metrics(ReflectionMask::Zero(10, 10), ref, 1);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 0.0);
    CHECK(r.iou == 0.0);
  }
  SUBCASE("both empty scores ones") {
    const MaskMetrics r =
        mask_metrics(ReflectionMask::Zero(6, 6), ReflectionMask::Zero(6, 6), 3);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.iou == 1.0);
  }
  SUBCASE("10x10 square shifted by one pixel, dilation 2") {
    ReflectionMask ref = ReflectionMask::Zero(100, 100);
    ref.block(45, 45, 10, 10).setConstant(1);
    ReflectionMask pred = ReflectionMask::Zero(100, 100);
    pred.block(45, 46, 10, 10).setConstant(1);
    const MaskMetrics r = mask_metrics(pred, ref, 2);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(r.iou == doctest::Approx(90.0 / 110.0).epsilon(1e-12));
  }
  SUBCASE("iou is symmetric at dilation 0") {
    Rng rng(31);
    ReflectionMask a(12, 12), b(12, 12);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        a(i, j) = rng.bounded_int(2) ? 1 : 0;
        b(i, j) = rng.bounded_int(2) ? 1 : 0;
      }
    CHECK(mask_metrics(a, b, 0).iou == mask_metrics(b, a, 0).iou);
  }
}

TEST_CASE("tv_norm closed forms and scaling") {
  SUBCASE("constant plane has zero TV") {
    CHECK(tv_norm(PlaneF(PlaneF::Constant(5, 7, 0.3f))) == 0.0f);
  }
  SUBCASE("half-zero half-one 4x4 plane") {
    PlaneF p = PlaneF::Zero(4, 4);
    p.rightCols(2).setConstant(1.0f);
    CHECK(tv_norm(p) == doctest::Approx(0.25).epsilon(1e-7));
  }
  SUBCASE("constant shift and scaling laws") {
    Rng rng(6);
    const PlaneF p = testutil::noise_plane(9, 9, rng);
    CHECK(tv_norm(PlaneF(p + 0.4f)) == doctest::Approx(tv_norm(p)).epsilon(1e-5));
    CHECK(tv_norm(PlaneF(-3.0f * p)) == doctest::Approx(3.0f * tv_norm(p)).epsilon(1e-5));
  }
  SUBCASE("single pixel has zero TV") { CHECK(tv_norm(PlaneF(PlaneF::Constant(1, 1, 2.0f))) == 0.0f); }
}

TEST_CASE("gradient_difference_map zero cases and maxrf cross-check") {
  Rng rng(41);
  const Image t = testutil::noise_image(18, 18, 3, rng, 0.2f, 0.6f);
  SUBCASE("identical pair and constant offset both vanish") {
    CHECK(gradient_difference_map(t, t).maxCoeff() == 0.0f);
    Image shifted = t;
    for (auto& p : shifted.planes) p += 0.2f;
    CHECK(gradient_difference_map(shifted, t).maxCoeff() <= 1e-5f);
  }
  SUBCASE("equals |comparison| from the exact maxrf options") {
    const Image i_img = add_bump(t, 9, 9, 5, 0.3f);
    const MaxRFResult r = maxrf(i_img, t, MaxRFOptions::exact_eq1());
    const PlaneF gdm = gradient_difference_map(i_img, t);
    CHECK((gdm - r.comparison.abs()).abs().maxCoeff() <= 1e-6f);
  }
}

TEST_CASE("alignment_score diagnostics") {
  Rng rng(52);
  const Image t = testutil::noise_image(40, 40, 3, rng, 0.1f, 0.9f);
  SUBCASE("self pair peaks at zero shift") {
    const AlignmentReport rep = alignment_score(t, t);
    CHECK(rep.best_shift.dx == 0);
    CHECK(rep.best_shift.dy == 0);
    CHECK(rep.aligned);
    CHECK(rep.ncc_at_best >= rep.ncc_at_zero);
    CHECK(rep.ncc_at_zero == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("two-pixel translation is flagged with best_shift (2, 0)") {
    Image shifted(40, 40, 3, Encoding::srgb);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j)
          shifted.planes[static_cast<std::size_t>(c)](i, j) =
              t.planes[static_cast<std::size_t>(c)](i, std::max(j - 2, 0));
    const AlignmentReport rep = alignment_score(shifted, t);
    CHECK(rep.best_shift.dx == 2);
    CHECK(rep.best_shift.dy == 0);
    CHECK_FALSE(rep.aligned);
    CHECK(rep.ncc_at_best > rep.ncc_at_zero + 0.02);

    // Swapping the roles negates the best shift and keeps the verdict.
    const AlignmentReport swapped = alignment_score(t, shifted);
    CHECK(swapped.best_shift.dx == -2);
    CHECK(swapped.best_shift.dy == 0);
    CHECK_FALSE(swapped.aligned);
  }
  SUBCASE("independent noise stays aligned (no shift helps)") {
    Rng r2(53);
    const Image other = testutil::noise_image(200, 200, 3, r2, 0.1f, 0.9f);
    Rng r3(54);
    const Image base = testutil::noise_image(200, 200, 3, r3, 0.1f, 0.9f);
    const AlignmentReport rep = alignment_score(other, base);
    CHECK(rep.aligned);
    CHECK(std::abs(rep.ncc_at_best) < 0.1);
  }
  SUBCASE("shift window bounds are respected") {
    const AlignmentReport rep = alignment_score(t, t, 2);
    CHECK(std::abs(rep.best_shift.dx) <= 2);
    CHECK(std::abs(rep.best_shift.dy) <= 2);
  }
  SUBCASE("tiny images are rejected") {
    const Image small = testutil::constant_image(3, 3, 3, 0.5f);
    CHECK_THROWS_AS(alignment_score(small, small, 3), std::runtime_error);
  }
}
