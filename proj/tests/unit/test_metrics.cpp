// SPDX-License-Identifier: Apache-2.0
#include "reflkit/metrics.hpp"

#include "reflkit/image_io.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace reflkit;

namespace {

// Direct two-loop MSE in double; no shared accumulation code.
double oracle_psnr(const Image& a, const Image& b, double peak) {
  double acc = 0.0;
  long n = 0;
  for (std::size_t c = 0; c < a.planes.size(); ++c)
    for (int i = 0; i < a.height(); ++i)
      for (int j = 0; j < a.width(); ++j) {
        const double d = double(a.planes[c](i, j)) - double(b.planes[c](i, j));
        acc += d * d;
        ++n;
      }
  if (acc == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / (acc / double(n)));
}

// Direct per-window evaluation of the similarity index: builds the 11x11
// Gaussian weights from the formula and applies them position by position.
double oracle_ssim(const Image& a, const Image& b) {
  double win[11][11];
  double wsum = 0.0;
  for (int u = 0; u < 11; ++u)
    for (int v = 0; v < 11; ++v) {
      const double du = u - 5, dv = v - 5;
      win[u][v] = std::exp(-(du * du + dv * dv) / (2.0 * 1.5 * 1.5));
      wsum += win[u][v];
    }
  for (auto& row : win)
    for (double& w : row) w /= wsum;

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t c = 0; c < a.planes.size(); ++c) {
    double acc = 0.0;
    long n = 0;
    for (int i = 0; i + 11 <= a.height(); ++i)
      for (int j = 0; j + 11 <= a.width(); ++j) {
        double ma = 0, mb = 0;
        for (int u = 0; u < 11; ++u)
          for (int v = 0; v < 11; ++v) {
            ma += win[u][v] * a.planes[c](i + u, j + v);
            mb += win[u][v] * b.planes[c](i + u, j + v);
          }
        double va = 0, vb = 0, cov = 0;
        for (int u = 0; u < 11; ++u)
          for (int v = 0; v < 11; ++v) {
            const double da = a.planes[c](i + u, j + v) - ma;
            const double db = b.planes[c](i + u, j + v) - mb;
            va += win[u][v] * da * da;
            vb += win[u][v] * db * db;
            cov += win[u][v] * da * db;
          }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++n;
      }
    total += acc / double(n);
  }
  return total / double(a.planes.size());
}

}  // namespace

TEST_CASE("psnr anchors and oracle agreement") {
  Rng rng(3);
  const Image a = testutil::noise_image(24, 20, 3, rng);
  SUBCASE("identical images score infinity") {
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0);
  }
  SUBCASE("a uniform 0.1 offset scores 20 dB") {
    // A varied base lets the per-pixel float rounding of the offset average
    // out; a constant base would leave a one-sided ~2e-6 dB bias.
    Rng r2(30);
    const Image base = testutil::noise_image(16, 16, 3, r2, 0.1f, 0.8f);
    Image off = base;
    for (auto& p : off.planes) p += 0.1f;
    CHECK(std::abs(psnr(base, off) - 20.0) < 1e-6);
  }
  SUBCASE("random pairs match the two-loop oracle to 1e-9 relative") {
    Rng r2(4);
    for (int trial = 0; trial < 5; ++trial) {
      const Image x = testutil::noise_image(17, 23, 3, r2);
      const Image y = testutil::noise_image(17, 23, 3, r2);
      const double got = psnr(x, y);
      const double want = oracle_psnr(x, y, 1.0);
      CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
  SUBCASE("symmetry and peak scaling") {
    Rng r2(5);
    const Image x = testutil::noise_image(12, 12, 3, r2);
    const Image y = testutil::noise_image(12, 12, 3, r2);
    CHECK(psnr(x, y) == psnr(y, x));
    CHECK(psnr(x, y, 2.0) == doctest::Approx(psnr(x, y) + 20.0 * std::log10(2.0))
                                 .epsilon(1e-12));
  }
  SUBCASE("channel permutation leaves the pooled score unchanged") {
    Rng r2(6);
    Image x = testutil::noise_image(10, 10, 3, r2);
    Image y = testutil::noise_image(10, 10, 3, r2);
    Image xp = x, yp = y;
    std::swap(xp.planes[0], xp.planes[2]);
    std::swap(yp.planes[0], yp.planes[2]);
    CHECK(psnr(xp, yp) == psnr(x, y));
  }
  SUBCASE("shape mismatches are rejected") {
    const Image b = testutil::constant_image(24, 21, 3, 0.5f);
    CHECK_THROWS_AS(psnr(a, b), std::runtime_error);
  }
}

TEST_CASE("ssim anchors and oracle agreement") {
  Rng rng(7);
  const Image a = testutil::noise_image(16, 16, 3, rng);
  SUBCASE("identical images score exactly 1") {
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("the score is symmetric") {
    Rng r2(8);
    const Image b = testutil::noise_image(16, 16, 3, r2);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  }
  SUBCASE("random 16x16 pairs match the direct per-window oracle") {
    Rng r2(9);
    for (int trial = 0; trial < 3; ++trial) {
      const Image x = testutil::noise_image(16, 16, 3, r2);
      const Image y = testutil::noise_image(16, 16, 3, r2);
      const double got = ssim(x, y);
      const double want = oracle_ssim(x, y);
      CHECK(std::abs(got - want) <= 1e-9);
      CHECK(got <= 1.0 + 1e-12);
    }
  }
  SUBCASE("sub-window images are rejected") {
    const Image tiny = testutil::constant_image(10, 16, 3, 0.5f);
    CHECK_THROWS_AS(ssim(tiny, tiny), std::runtime_error);
  }
}

TEST_CASE("evaluate_dirs pairs files by name") {
  testutil::TempDir td("metrics_eval");
  const auto pred = td.path / "pred";
  const auto gt = td.path / "gt";
  std::filesystem::create_directories(pred);
  std::filesystem::create_directories(gt);

  SUBCASE("identical directories are complete with infinite psnr") {
    Rng rng(10);
    for (const char* name : {"a.png", "b.png"}) {
      const Image img = testutil::noise_image(16, 16, 3, rng);
      save_png((pred / name).string(), img);
      save_png((gt / name).string(), img);
    }
    const EvalResult r = evaluate_dirs(pred.string(), gt.string());
    CHECK(r.complete());
    REQUIRE(r.table.rows.size() == 2);
    CHECK(r.table.rows[0].name == "a.png");
    CHECK(r.table.rows[1].name == "b.png");
    for (const auto& row : r.table.rows) {
      CHECK(std::isinf(row.psnr));
      CHECK(row.ssim == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(std::isinf(r.table.mean_psnr));
    CHECK(r.table.psnr_inf_excluded == 2);
  }
  SUBCASE("means average finite rows and hand-computed values") {
    Rng rng(11);
    const Image x = testutil::noise_image(16, 16, 3, rng);
    const Image y = testutil::noise_image(16, 16, 3, rng);
    save_png((pred / "p.png").string(), x);
    save_png((gt / "p.png").string(), y);
    save_png((pred / "q.png").string(), x);
    save_png((gt / "q.png").string(), x);
    const EvalResult r = evaluate_dirs(pred.string(), gt.string());
    REQUIRE(r.table.rows.size() == 2);
    const Image px = load_image((pred / "p.png").string());
    const Image py = load_image((gt / "p.png").string());
    CHECK(r.table.rows[0].psnr == doctest::Approx(psnr(px, py)).epsilon(1e-12));
    CHECK(r.table.psnr_inf_excluded == 1);
    CHECK(r.table.mean_psnr == doctest::Approx(r.table.rows[0].psnr).epsilon(1e-12));
    const double mean_ssim = 0.5 * (r.table.rows[0].ssim + r.table.rows[1].ssim);
    CHECK(r.table.mean_ssim == doctest::Approx(mean_ssim).epsilon(1e-12));
  }
  SUBCASE("unmatched files and failing pairs are reported") {
    Rng rng(12);
    const Image x = testutil::noise_image(16, 16, 3, rng);
    save_png((pred / "only_pred.png").string(), x);
    save_png((gt / "only_gt.png").string(), x);
    save_png((pred / "bad.png").string(), x);
    save_png((gt / "bad.png").string(), testutil::constant_image(12, 16, 3, 0.5f));
    const EvalResult r = evaluate_dirs(pred.string(), gt.string());
    CHECK_FALSE(r.complete());
    REQUIRE(r.unmatched_pred.size() == 1);
    CHECK(r.unmatched_pred[0] == "only_pred.png");
    REQUIRE(r.unmatched_gt.size() == 1);
    CHECK(r.unmatched_gt[0] == "only_gt.png");
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].find("bad.png") != std::string::npos);
    CHECK(r.table.rows.empty());
    CHECK(r.table.mean_psnr == 0.0);
  }
}

TEST_CASE("report tables format deterministically") {
  EvalTable t;
  t.rows = {{"a.png", 31.25, 0.912345678}, {"b.png", 28.5, 0.87654321}};
  t.mean_psnr = 29.875;
  t.mean_ssim = 0.894444944;
  SUBCASE("csv header and repeatability") {
    const std::string csv = table_csv(t);
    CHECK(csv.rfind("name,psnr_db,ssim\n", 0) == 0);
    CHECK(csv.find("a.png,31.250000,0.91234568") != std::string::npos);
    CHECK(table_csv(t) == csv);
  }
  SUBCASE("txt table carries an AVERAGE row") {
    const std::string txt = table_txt(t);
    CHECK(txt.find("AVERAGE") != std::string::npos);
    CHECK(txt.find("a.png") != std::string::npos);
    CHECK(table_txt(t) == txt);
  }
}
