// SPDX-License-Identifier: Apache-2.0
#include "reflkit/dataset.hpp"

#include "reflkit/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace reflkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Width/height from the PNG IHDR chunk; avoids a full decode during indexing.
bool read_png_size(const fs::path& path, int* w, int* h) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  unsigned char buf[24];
  f.read(reinterpret_cast<char*>(buf), sizeof(buf));
  if (f.gcount() != sizeof(buf)) return false;
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (!std::equal(sig, sig + 8, buf)) return false;
  auto be32 = [&](int off) {
    return (static_cast<std::uint32_t>(buf[off]) << 24) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) | buf[off + 3];
  };
  *w = static_cast<int>(be32(16));
  *h = static_cast<int>(be32(20));
  return *w > 0 && *h > 0;
}

json clip_to_json(const ClipEntry& c) {
  json j;
  j["clip_id"] = c.clip_id;
  j["device"] = c.device;
  j["height"] = c.height;
  j["reflections"] = c.reflections;
  j["scene_tags"] = c.scene_tags;
  j["transmission"] = c.transmission;
  j["width"] = c.width;
  return j;
}

ClipEntry clip_from_json(const json& j) {
  ClipEntry c;
  c.clip_id = j.at("clip_id").get<std::string>();
  c.device = j.at("device").get<std::string>();
  c.height = j.at("height").get<int>();
  c.reflections = j.at("reflections").get<std::vector<std::string>>();
  c.scene_tags = j.at("scene_tags").get<std::vector<std::string>>();
  c.transmission = j.at("transmission").get<std::string>();
  c.width = j.at("width").get<int>();
  require(!c.reflections.empty(), "manifest: clip " + c.clip_id + " has no reflections");
  return c;
}

}  // namespace

BuildReport build_manifest(const std::string& root) {
  require(fs::is_directory(root), "build_manifest: not a directory: " + root);
  BuildReport report;

  std::vector<fs::path> clip_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && e.path().filename().string().rfind("clip_", 0) == 0)
      clip_dirs.push_back(e.path());
  }
  std::sort(clip_dirs.begin(), clip_dirs.end());

  for (const auto& dir : clip_dirs) {
    const std::string clip_id = dir.filename().string();
    ClipEntry entry;
    entry.clip_id = clip_id;

    const fs::path t_path = dir / "T.png";
    if (!fs::is_regular_file(t_path)) {
      report.errors.push_back({clip_id, "missing T.png"});
      continue;
    }
    int tw = 0, th = 0;
    if (!read_png_size(t_path, &tw, &th)) {
      report.errors.push_back({clip_id, "unreadable T.png"});
      continue;
    }

    std::vector<std::string> refl_names;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.rfind("R_", 0) == 0 && e.path().extension() == ".png")
        refl_names.push_back(name);
    }
    std::sort(refl_names.begin(), refl_names.end());
    if (refl_names.empty()) {
      report.errors.push_back({clip_id, "no R_*.png frames"});
      continue;
    }

    bool dims_ok = true;
    for (const auto& name : refl_names) {
      int rw = 0, rh = 0;
      if (!read_png_size(dir / name, &rw, &rh)) {
        report.errors.push_back({clip_id, "unreadable " + name});
        dims_ok = false;
        break;
      }
      if (rw != tw || rh != th) {
        char msg[160];
        std::snprintf(msg, sizeof(msg), "dimension mismatch: %s is %dx%d but T.png is %dx%d",
                      name.c_str(), rw, rh, tw, th);
        report.errors.push_back({clip_id, msg});
        dims_ok = false;
        break;
      }
    }
    if (!dims_ok) continue;

    entry.transmission = clip_id + "/T.png";
    for (const auto& name : refl_names) entry.reflections.push_back(clip_id + "/" + name);
    entry.width = tw;
    entry.height = th;
    report.manifest.clips.push_back(std::move(entry));
  }
  return report;
}

std::string manifest_json(const PairManifest& m) {
  json j;
  j["version"] = m.version;
  j["clips"] = json::array();
  for (const auto& c : m.clips) j["clips"].push_back(clip_to_json(c));
  return j.dump(2) + "\n";
}

void save_manifest(const std::string& path, const PairManifest& m) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "save_manifest: cannot open " + path);
  f << manifest_json(m);
  require(static_cast<bool>(f), "save_manifest: write failed for " + path);
}

PairManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "load_manifest: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_manifest: invalid JSON in " + path + ": " + e.what());
  }
  PairManifest m;
  m.version = j.at("version").get<int>();
  require(m.version == 1, "load_manifest: unsupported version in " + path);
  for (const auto& cj : j.at("clips")) m.clips.push_back(clip_from_json(cj));

  std::vector<std::string> ids;
  for (const auto& c : m.clips) ids.push_back(c.clip_id);
  std::sort(ids.begin(), ids.end());
  require(std::adjacent_find(ids.begin(), ids.end()) == ids.end(),
          "load_manifest: duplicate clip ids in " + path);
  return m;
}

ValidationReport validate_manifest(const PairManifest& m, const std::string& base_dir,
                                   bool check_alignment, int max_shift, float delta) {
  ValidationReport report;
  const fs::path base(base_dir);

  for (const auto& clip : m.clips) {
    Image t;
    bool t_ok = false;
    std::string t_error;
    try {
      t = load_image((base / clip.transmission).string());
      t_ok = true;
    } catch (const std::exception& e) {
      t_error = e.what();
    }

    for (const auto& refl : clip.reflections) {
      PairRecord rec;
      rec.clip_id = clip.clip_id;
      rec.reflection = refl;
      report.total += 1;

      if (!t_ok) {
        rec.error = "transmission unreadable: " + t_error;
        report.missing += 1;
        report.pairs.push_back(std::move(rec));
        continue;
      }
      Image r;
      try {
        r = load_image((base / refl).string());
      } catch (const std::exception& e) {
        rec.error = e.what();
        report.missing += 1;
        report.pairs.push_back(std::move(rec));
        continue;
      }
      rec.exists = true;
      rec.dims_ok = r.height() == clip.height && r.width() == clip.width &&
                    t.height() == clip.height && t.width() == clip.width;
      if (!rec.dims_ok) {
        report.dim_mismatches += 1;
        report.pairs.push_back(std::move(rec));
        continue;
      }
      if (check_alignment) {
        rec.alignment_checked = true;
        const AlignmentReport a = alignment_score(r, t, max_shift, delta);
        rec.aligned = a.aligned;
        rec.best_shift = a.best_shift;
        if (!a.aligned) report.misaligned += 1;
      }
      if (rec.aligned) report.ok += 1;
      report.pairs.push_back(std::move(rec));
    }
  }
  return report;
}

std::string validation_report_json(const ValidationReport& r) {
  json j;
  j["pairs"] = json::array();
  for (const auto& p : r.pairs) {
    json pj;
    pj["aligned"] = p.aligned;
    pj["alignment_checked"] = p.alignment_checked;
    pj["best_shift"] = {p.best_shift.dx, p.best_shift.dy};
    pj["clip_id"] = p.clip_id;
    pj["dims_ok"] = p.dims_ok;
    pj["error"] = p.error;
    pj["exists"] = p.exists;
    pj["reflection"] = p.reflection;
    j["pairs"].push_back(std::move(pj));
  }
  json s;
  s["dim_mismatches"] = r.dim_mismatches;
  s["misaligned"] = r.misaligned;
  s["missing"] = r.missing;
  s["ok"] = r.ok;
  s["total"] = r.total;
  j["summary"] = std::move(s);
  return j.dump(2) + "\n";
}

std::pair<PairManifest, PairManifest> split_manifest(const PairManifest& m, const SplitSpec& s) {
  const int n = static_cast<int>(m.clips.size());
  require(n >= 2, "split_manifest: need at least 2 clips");
  require(s.train_fraction > 0.0 && s.train_fraction < 1.0,
          "split_manifest: train_fraction must be in (0, 1)");

  std::vector<int> order(m.clips.size());
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(s.seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(rng.bounded_int(i + 1))]);

  // The epsilon guards ceil against float noise at exact multiples.
  const int n_train =
      static_cast<int>(std::ceil(s.train_fraction * static_cast<double>(n) - 1e-9));
  std::vector<bool> in_train(m.clips.size(), false);
  for (int i = 0; i < n_train; ++i) in_train[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  std::pair<PairManifest, PairManifest> out;
  out.first.version = m.version;
  out.second.version = m.version;
  for (std::size_t i = 0; i < m.clips.size(); ++i)
    (in_train[i] ? out.first : out.second).clips.push_back(m.clips[i]);
  return out;
}

std::vector<PatchPair> sample_patches(const PairManifest& m, const std::string& base_dir,
                                      int size, int count, Rng& rng,
                                      std::vector<std::string>* warnings) {
  require(size >= 1, "sample_patches: size must be >= 1");
  require(count >= 0, "sample_patches: count must be >= 0");
  const fs::path base(base_dir);

  std::vector<const ClipEntry*> eligible;
  for (const auto& clip : m.clips) {
    if (clip.width >= size && clip.height >= size) {
      eligible.push_back(&clip);
    } else if (warnings) {
      warnings->push_back("clip " + clip.clip_id + " is smaller than the patch size, skipped");
    }
  }
  if (count == 0) return {};
  require(!eligible.empty(), "sample_patches: no clip is large enough for the patch size");

  std::vector<PatchPair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const ClipEntry& clip = *eligible[rng.bounded(eligible.size())];
    const std::string& refl = clip.reflections[rng.bounded(clip.reflections.size())];
    Image i_full = load_image((base / refl).string());
    Image t_full = load_image((base / clip.transmission).string());
    require(i_full.same_shape(t_full),
            "sample_patches: dimension mismatch in clip " + clip.clip_id);
    CropResult cr = random_crop(i_full, size, rng);
    PatchPair pp;
    pp.i = std::move(cr.patch);
    pp.t = crop(t_full, cr.x, cr.y, size, size);
    pp.clip_id = clip.clip_id;
    pp.reflection = refl;
    pp.x = cr.x;
    pp.y = cr.y;
    out.push_back(std::move(pp));
  }
  return out;
}

}  // namespace reflkit
