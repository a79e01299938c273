// SPDX-License-Identifier: Apache-2.0
#include "reflkit/compositor.hpp"

#include "reflkit/metrics.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace reflkit;

namespace {

ReflectionSpec gentle_spec(std::uint64_t seed) {
  ReflectionSpec s;
  s.ambient_gain = 0.05f;
  s.ambient_cells = 4;
  s.local_alpha = 0.5f;
  s.local_blur = 2.5f;
  s.placement.random = true;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("make_ambient_field range, structure, and draw discipline") {
  SUBCASE("values stay inside the draw interval") {
    Rng rng(3);
    const PlaneF f = make_ambient_field(32, 32, 0.3f, 4, rng);
    CHECK(f.minCoeff() >= 0.15f - 1e-6f);
    CHECK(f.maxCoeff() <= 0.3f + 1e-6f);
  }
  SUBCASE("zero gain gives a zero plane but consumes the same draws") {
    Rng a(9), b(9);
    const PlaneF fa = make_ambient_field(16, 16, 0.0f, 4, a);
    const PlaneF fb = make_ambient_field(16, 16, 0.25f, 4, b);
    CHECK(fa.maxCoeff() == 0.0f);
    CHECK(fb.maxCoeff() > 0.0f);
    CHECK(a.raw() == b.raw());
  }
  SUBCASE("2x2 grid on a 3x3 canvas interpolates bilinearly") {
    Rng rng(11);
    const PlaneF f = make_ambient_field(3, 3, 0.4f, 2, rng);
    const float corners = f(0, 0) + f(0, 2) + f(2, 0) + f(2, 2);
    CHECK(f(1, 1) == doctest::Approx(corners / 4.0f).epsilon(1e-6));
    const float top = 0.5f * (f(0, 0) + f(0, 2));
    CHECK(f(0, 1) == doctest::Approx(top).epsilon(1e-6));
  }
  SUBCASE("same seed reproduces the field bit for bit") {
    Rng a(5), b(5);
    const PlaneF fa = make_ambient_field(20, 24, 0.2f, 3, a);
    const PlaneF fb = make_ambient_field(20, 24, 0.2f, 3, b);
    CHECK((fa == fb).all());
  }
}

TEST_CASE("make_local_layer support definition") {
  SUBCASE("zero alpha yields an empty layer and empty support") {
    const Image obj = testutil::constant_image(8, 8, 3, 0.7f);
    ReflectionSpec s;
    s.local_alpha = 0.0f;
    s.local_blur = 0.0f;
    s.placement = {false, 4, 4};
    Rng rng(2);
    const LocalLayer l = make_local_layer(obj, 24, 24, s, rng);
    for (const auto& p : l.layer.planes) CHECK(p.maxCoeff() == 0.0f);
    CHECK((l.support != 0).count() == 0);
  }
  SUBCASE("unblurred uniform patch has support only along its boundary") {
    const Image obj = testutil::constant_image(12, 12, 3, 0.8f);
    ReflectionSpec s;
    s.local_alpha = 1.0f;
    s.local_blur = 0.0f;
    s.placement = {false, 5, 5};
    Rng rng(2);
    const LocalLayer l = make_local_layer(obj, 30, 30, s, rng);
    CHECK(l.support(5, 5) == 1);    // patch corner: gradient plus dilation
    CHECK(l.support(11, 11) == 0);  // deep interior is flat
    CHECK(l.support(0, 0) == 0);    // far outside the patch
    CHECK((l.support != 0).count() > 0);
  }
  SUBCASE("fixed placements that overflow the canvas throw") {
    const Image obj = testutil::constant_image(12, 12, 3, 0.8f);
    ReflectionSpec s;
    s.local_alpha = 0.5f;
    s.placement = {false, 15, 2};
    Rng rng(2);
    CHECK_THROWS_AS(make_local_layer(obj, 20, 20, s, rng), std::runtime_error);
  }
}

TEST_CASE("compose_pair limit cases") {
  Rng trng(7);
  const Image t = testutil::noise_image(32, 32, 3, trng, 0.2f, 0.8f);
  SUBCASE("no ambient and no local layer reproduces T") {
    ReflectionSpec s;
    s.ambient_gain = 0.0f;
    s.local_alpha = 0.0f;
    const ComposedPair p = compose_pair(t, s, nullptr);
    CHECK(testutil::max_abs_diff(p.i, p.t) < 1e-5f);
    CHECK(p.clipped_count == 0);
    CHECK((p.ref_support != 0).count() == 0);
  }
  SUBCASE("pure ambient brightens every pixel of a mid-gray T") {
    const Image gray = testutil::constant_image(16, 16, 3, 0.5f);
    ReflectionSpec s;
    s.ambient_gain = 0.3f;
    s.local_alpha = 0.0f;
    const ComposedPair p = compose_pair(gray, s, nullptr);
    for (const auto& plane : p.i.planes) CHECK((plane > 0.5f).all());
  }
  SUBCASE("a missing object is only legal at zero alpha") {
    ReflectionSpec s;
    s.local_alpha = 0.4f;
    CHECK_THROWS_AS(compose_pair(t, s, nullptr), std::runtime_error);
  }
}

TEST_CASE("compose_pair monotone degradation") {
  Rng trng(13);
  const Image t = testutil::noise_image(48, 48, 3, trng, 0.2f, 0.8f);
  Rng orng(14);
  const Image obj = testutil::noise_image(12, 12, 3, orng, 0.3f, 1.0f);
  SUBCASE("psnr falls strictly as the ambient gain rises") {
    double prev = std::numeric_limits<double>::infinity();
    for (float g0 : {0.05f, 0.1f, 0.2f}) {
      ReflectionSpec s;
      s.ambient_gain = g0;
      s.local_alpha = 0.0f;
      s.seed = 99;
      const ComposedPair p = compose_pair(t, s, nullptr);
      const double v = psnr(p.i, p.t);
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("psnr never improves as the layer strength rises") {
    double prev = std::numeric_limits<double>::infinity();
    for (float alpha : {0.2f, 0.5f, 0.8f}) {
      ReflectionSpec s = gentle_spec(99);
      s.local_alpha = alpha;
      const ComposedPair p = compose_pair(t, s, &obj);
      const double v = psnr(p.i, p.t);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("compose_pair determinism and diagnostics") {
  Rng trng(23);
  const Image t = testutil::noise_image(64, 64, 3, trng, 0.15f, 0.85f);
  Rng orng(24);
  const Image obj = testutil::noise_image(16, 16, 3, orng, 0.4f, 1.0f);
  SUBCASE("a repeated seed reproduces the pair bit for bit") {
    const ComposedPair a = compose_pair(t, gentle_spec(5), &obj);
    const ComposedPair b = compose_pair(t, gentle_spec(5), &obj);
    CHECK(testutil::images_equal(a.i, b.i));
    CHECK(testutil::images_equal(a.t, b.t));
    CHECK((a.ref_support == b.ref_support).all());
    CHECK(a.clipped_count == b.clipped_count);
  }
  SUBCASE("mask positives stay on the layer support") {
    int inside = 0, total = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const ComposedPair p = compose_pair(t, gentle_spec(seed), &obj);
      const ReflectionMask m = maxrf(p.i, p.t).mask;
      const ReflectionMask allowed = dilate(p.ref_support, 4);
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
          if (m(i, j) && !p.clipped(i, j)) {
            ++total;
            inside += allowed(i, j) ? 1 : 0;
          }
    }
    REQUIRE(total > 0);
    CHECK(double(inside) / double(total) >= 0.99);
  }
  SUBCASE("composed pairs report as aligned") {
    const ComposedPair p = compose_pair(t, gentle_spec(8), &obj);
    CHECK(alignment_score(p.i, p.t).aligned);
  }
  SUBCASE("bright scenes under strong gain saturate and are flagged") {
    const Image bright = testutil::constant_image(32, 32, 3, 0.95f);
    ReflectionSpec s;
    s.ambient_gain = 0.4f;
    s.local_alpha = 0.0f;
    const ComposedPair p = compose_pair(bright, s, nullptr);
    CHECK(p.clipped_count > 0);
    CHECK((p.clipped != 0).count() == p.clipped_count);
  }
}
