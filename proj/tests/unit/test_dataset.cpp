// SPDX-License-Identifier: Apache-2.0
#include "reflkit/dataset.hpp"

#include "reflkit/image_io.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace reflkit;
namespace fs = std::filesystem;

namespace {

// Writes clip_<id>/T.png plus `frames` reflection images into `root`.
void write_clip(const fs::path& root, const std::string& id, int h, int w, int frames,
                std::uint64_t seed) {
  const fs::path dir = root / ("clip_" + id);
  fs::create_directories(dir);
  Rng rng(seed);
  const Image t = testutil::noise_image(h, w, 3, rng, 0.2f, 0.8f);
  save_png((dir / "T.png").string(), t);
  for (int k = 1; k <= frames; ++k) {
    Image r = t;
    for (auto& p : r.planes) p = (p + 0.05f * static_cast<float>(k)).min(1.0f);
    char name[32];
    std::snprintf(name, sizeof name, "R_%03d.png", k);
    save_png((dir / name).string(), r);
  }
}

}  // namespace

TEST_CASE("build_manifest indexes clips and isolates bad ones") {
  testutil::TempDir td("dataset_build");
  SUBCASE("an empty root builds an empty manifest") {
    const BuildReport r = build_manifest(td.str(""));
    CHECK(r.ok());
    CHECK(r.manifest.clips.empty());
  }
  SUBCASE("frames are indexed in sorted order") {
    write_clip(td.path, "a", 24, 20, 3, 1);
    const BuildReport r = build_manifest(td.str(""));
    REQUIRE(r.ok());
    REQUIRE(r.manifest.clips.size() == 1);
    const ClipEntry& c = r.manifest.clips[0];
    CHECK(c.clip_id == "clip_a");
    CHECK(c.transmission == "clip_a/T.png");
    REQUIRE(c.reflections.size() == 3);
    CHECK(c.reflections[0] == "clip_a/R_001.png");
    CHECK(c.reflections[2] == "clip_a/R_003.png");
    CHECK(c.width == 20);
    CHECK(c.height == 24);
  }
  SUBCASE("a dimension mismatch excludes the clip and names the frame") {
    write_clip(td.path, "good", 16, 16, 2, 2);
    write_clip(td.path, "bad", 16, 16, 2, 3);
    const Image odd = testutil::constant_image(8, 8, 3, 0.5f);
    save_png(td.str("clip_bad/R_002.png"), odd);
    const BuildReport r = build_manifest(td.str(""));
    REQUIRE(r.manifest.clips.size() == 1);
    CHECK(r.manifest.clips[0].clip_id == "clip_good");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].clip_id == "clip_bad");
    CHECK(r.errors[0].message.find("R_002") != std::string::npos);
  }
  SUBCASE("missing transmission or empty clips are reported") {
    fs::create_directories(td.path / "clip_no_t");
    {
      Rng rng(4);
      save_png(td.str("clip_no_t/R_001.png"), testutil::noise_image(8, 8, 3, rng));
    }
    fs::create_directories(td.path / "clip_no_r");
    {
      Rng rng(5);
      save_png(td.str("clip_no_r/T.png"), testutil::noise_image(8, 8, 3, rng));
    }
    const BuildReport r = build_manifest(td.str(""));
    CHECK(r.manifest.clips.empty());
    REQUIRE(r.errors.size() == 2);
    std::set<std::string> ids;
    for (const auto& e : r.errors) ids.insert(e.clip_id);
    CHECK(ids.count("clip_no_t") == 1);
    CHECK(ids.count("clip_no_r") == 1);
  }
}

TEST_CASE("manifest serialization round trips byte for byte") {
  testutil::TempDir td("dataset_json");
  write_clip(td.path, "a", 12, 12, 2, 1);
  write_clip(td.path, "b", 14, 10, 1, 2);
  const BuildReport r = build_manifest(td.str(""));
  REQUIRE(r.ok());
  const std::string path = td.str("manifest.json");
  save_manifest(path, r.manifest);
  const PairManifest loaded = load_manifest(path);
  CHECK(manifest_json(loaded) == manifest_json(r.manifest));
  const std::string again = td.str("again.json");
  save_manifest(again, loaded);
  CHECK(testutil::read_file(again) == testutil::read_file(path));
  CHECK(manifest_json(loaded).back() == '\n');
}

TEST_CASE("validate_manifest checks existence, dimensions, and alignment") {
  testutil::TempDir td("dataset_validate");
  write_clip(td.path, "a", 40, 40, 2, 7);
  const BuildReport built = build_manifest(td.str(""));
  REQUIRE(built.ok());
  SUBCASE("a healthy manifest passes") {
    const ValidationReport v = validate_manifest(built.manifest, td.str(""), true);
    CHECK(v.all_ok());
    CHECK(v.total == 2);
    CHECK(v.misaligned == 0);
    for (const auto& p : v.pairs) {
      CHECK(p.exists);
      CHECK(p.dims_ok);
      CHECK(p.aligned);
    }
  }
  SUBCASE("a deleted frame is recorded, not thrown") {
    fs::remove(td.path / "clip_a" / "R_002.png");
    const ValidationReport v = validate_manifest(built.manifest, td.str(""), false);
    CHECK_FALSE(v.all_ok());
    CHECK(v.missing == 1);
    CHECK(v.ok == 1);
    bool found = false;
    for (const auto& p : v.pairs)
      if (p.reflection == "clip_a/R_002.png") {
        found = true;
        CHECK_FALSE(p.exists);
      }
    CHECK(found);
  }
  SUBCASE("a translated frame is flagged with its shift") {
    const Image t = load_image(td.str("clip_a/T.png"));
    Image shifted(40, 40, 3, Encoding::srgb);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j)
          shifted.planes[static_cast<std::size_t>(c)](i, j) =
              t.planes[static_cast<std::size_t>(c)](i, std::max(j - 2, 0));
    save_png(td.str("clip_a/R_001.png"), shifted);
    const ValidationReport v = validate_manifest(built.manifest, td.str(""), true);
    CHECK(v.misaligned == 1);
    bool found = false;
    for (const auto& p : v.pairs)
      if (p.reflection == "clip_a/R_001.png") {
        found = true;
        CHECK_FALSE(p.aligned);
        CHECK(p.best_shift.dx == 2);
        CHECK(p.best_shift.dy == 0);
      }
    CHECK(found);
    const std::string j = validation_report_json(v);
    CHECK(j.find("clip_a/R_001.png") != std::string::npos);
  }
}

TEST_CASE("split_manifest partitions whole clips") {
  PairManifest m;
  for (int k = 0; k < 10; ++k) {
    ClipEntry c;
    c.clip_id = "clip_" + std::to_string(k);
    c.transmission = c.clip_id + "/T.png";
    c.reflections = {c.clip_id + "/R_001.png"};
    c.width = c.height = 16;
    m.clips.push_back(c);
  }
  SUBCASE("fraction 0.7 of ten clips gives a 7/3 disjoint cover") {
    SplitSpec s{0.7, 42};
    const auto [train, test] = split_manifest(m, s);
    CHECK(train.clips.size() == 7);
    CHECK(test.clips.size() == 3);
    std::set<std::string> seen;
    for (const auto& c : train.clips) seen.insert(c.clip_id);
    for (const auto& c : test.clips) seen.insert(c.clip_id);
    CHECK(seen.size() == 10);
  }
  SUBCASE("the same seed reproduces the same split") {
    SplitSpec s{0.5, 9};
    const auto [a_train, a_test] = split_manifest(m, s);
    const auto [b_train, b_test] = split_manifest(m, s);
    CHECK(manifest_json(a_train) == manifest_json(b_train));
    CHECK(manifest_json(a_test) == manifest_json(b_test));
    CHECK(a_train.clips.size() == 5);
  }
  SUBCASE("each side keeps the original clip order") {
    SplitSpec s{0.5, 3};
    const auto [train, test] = split_manifest(m, s);
    for (std::size_t k = 1; k < train.clips.size(); ++k)
      CHECK(train.clips[k - 1].clip_id < train.clips[k].clip_id);
    for (std::size_t k = 1; k < test.clips.size(); ++k)
      CHECK(test.clips[k - 1].clip_id < test.clips[k].clip_id);
  }
  SUBCASE("degenerate inputs are rejected") {
    PairManifest one;
    one.clips.push_back(m.clips[0]);
    CHECK_THROWS_AS(split_manifest(one, SplitSpec{0.5, 0}), std::runtime_error);
    CHECK_THROWS_AS(split_manifest(m, SplitSpec{1.0, 0}), std::runtime_error);
    CHECK_THROWS_AS(split_manifest(m, SplitSpec{0.0, 0}), std::runtime_error);
  }
}

TEST_CASE("sample_patches draws co-located crops") {
  testutil::TempDir td("dataset_patches");
  write_clip(td.path, "a", 32, 32, 2, 11);
  write_clip(td.path, "b", 48, 40, 1, 12);
  const BuildReport built = build_manifest(td.str(""));
  REQUIRE(built.ok());
  SUBCASE("count zero is an empty success") {
    Rng rng(0);
    CHECK(sample_patches(built.manifest, td.str(""), 16, 0, rng).empty());
  }
  SUBCASE("negative counts are an error") {
    Rng rng(0);
    CHECK_THROWS_AS(sample_patches(built.manifest, td.str(""), 16, -1, rng),
                    std::runtime_error);
  }
  SUBCASE("patches match full-frame crops at their recorded offsets") {
    Rng rng(17);
    const auto patches = sample_patches(built.manifest, td.str(""), 16, 6, rng);
    REQUIRE(patches.size() == 6);
    for (const auto& p : patches) {
      CHECK(p.i.height() == 16);
      CHECK(p.i.width() == 16);
      const Image t_full = load_image(td.str(p.clip_id + "/T.png"));
      const Image r_full = load_image(td.str(p.reflection));
      CHECK(testutil::images_equal(p.t, crop(t_full, p.x, p.y, 16, 16)));
      CHECK(testutil::images_equal(p.i, crop(r_full, p.x, p.y, 16, 16)));
    }
  }
  SUBCASE("the same seed reproduces the same draw sequence") {
    Rng a(21), b(21);
    const auto pa = sample_patches(built.manifest, td.str(""), 16, 5, a);
    const auto pb = sample_patches(built.manifest, td.str(""), 16, 5, b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k) {
      CHECK(pa[k].clip_id == pb[k].clip_id);
      CHECK(pa[k].x == pb[k].x);
      CHECK(pa[k].y == pb[k].y);
      CHECK(testutil::images_equal(pa[k].i, pb[k].i));
    }
  }
  SUBCASE("undersized clips are skipped with a warning") {
    write_clip(td.path, "tiny", 8, 8, 1, 13);
    const BuildReport all = build_manifest(td.str(""));
    REQUIRE(all.ok());
    Rng rng(5);
    std::vector<std::string> warnings;
    const auto patches = sample_patches(all.manifest, td.str(""), 16, 8, rng, &warnings);
    CHECK(patches.size() == 8);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("clip_tiny") != std::string::npos);
    for (const auto& p : patches) CHECK(p.clip_id != "clip_tiny");
  }
  SUBCASE("no eligible clip at a positive count is an error") {
    PairManifest only_tiny;
    write_clip(td.path, "small", 8, 8, 1, 14);
    const BuildReport all = build_manifest(td.str(""));
    for (const auto& c : all.manifest.clips)
      if (c.clip_id == "clip_small") only_tiny.clips.push_back(c);
    REQUIRE(only_tiny.clips.size() == 1);
    Rng rng(5);
    CHECK_THROWS_AS(sample_patches(only_tiny, td.str(""), 16, 2, rng), std::runtime_error);
  }
}
