// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/image.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace testutil {

// Unique scratch directory, removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("reflkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path.string() : (path / rel).string();
  }
};

inline reflkit::Image constant_image(int h, int w, int c, float v,
                                     reflkit::Encoding enc = reflkit::Encoding::srgb) {
  reflkit::Image img(h, w, c, enc);
  for (auto& p : img.planes) p.setConstant(v);
  return img;
}

inline reflkit::Image noise_image(int h, int w, int c, reflkit::Rng& rng, float lo = 0.0f,
                                  float hi = 1.0f) {
  reflkit::Image img(h, w, c, reflkit::Encoding::srgb);
  for (auto& p : img.planes)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) p(i, j) = rng.uniform_float(lo, hi);
  return img;
}

inline reflkit::PlaneF noise_plane(int h, int w, reflkit::Rng& rng, float lo = 0.0f,
                                   float hi = 1.0f) {
  reflkit::PlaneF p(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) p(i, j) = rng.uniform_float(lo, hi);
  return p;
}

inline bool images_equal(const reflkit::Image& a, const reflkit::Image& b) {
  if (!a.same_shape(b)) return false;
  for (int c = 0; c < a.channels(); ++c)
    if (!(a.planes[static_cast<std::size_t>(c)] == b.planes[static_cast<std::size_t>(c)]).all())
      return false;
  return true;
}

inline float max_abs_diff(const reflkit::Image& a, const reflkit::Image& b) {
  float m = 0.0f;
  for (int c = 0; c < a.channels(); ++c)
    m = std::max(m, (a.planes[static_cast<std::size_t>(c)] -
                     b.planes[static_cast<std::size_t>(c)])
                        .abs()
                        .maxCoeff());
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
