// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace reflkit {

/**
 * A single image/feature channel. Row-major so that (row, col) indexing maps
 * onto the natural raster layout and raw buffers can be wrapped with Eigen::Map.
 */
template <class T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneF = Plane<float>;
using PlaneU8 = Plane<std::uint8_t>;

struct Shift {
  int dx = 0;
  int dy = 0;
};

/**
 * Deterministic RNG used by every sampling surface (crops, splits, compositor,
 * weight init, batch draws). mt19937_64 supplies the raw stream; the derived
 * draws below are implemented by hand because the std distribution objects are
 * not bit-portable across standard libraries. Draw order is part of each
 * caller's contract.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Unbiased integer in [0, n). Lemire's multiply-shift rejection method.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be > 0");
    while (true) {
      std::uint64_t x = gen_();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      auto lo = static_cast<std::uint64_t>(m);
      if (lo >= n || lo >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  int bounded_int(int n) { return static_cast<int>(bounded(static_cast<std::uint64_t>(n))); }

  // Double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float uniform_float() { return static_cast<float>(uniform()); }

  float uniform_float(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

}  // namespace reflkit
