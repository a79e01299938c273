// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/analysis.hpp"
#include "reflkit/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace reflkit {

/**
 * One capture session: a single transmission frame plus its reflection
 * frames. Paths are relative to the manifest's directory. All images in a
 * clip share dimensions.
 */
struct ClipEntry {
  std::string clip_id;
  std::string transmission;
  std::vector<std::string> reflections;
  std::string device;
  std::vector<std::string> scene_tags;
  int width = 0;
  int height = 0;
};

struct PairManifest {
  std::vector<ClipEntry> clips;
  int version = 1;
};

// Splits operate on whole clips so frames sharing a transmission never leak
// across the boundary.
struct SplitSpec {
  double train_fraction = 0.5;  // in (0, 1), exclusive
  std::uint64_t seed = 0;
};

struct BuildError {
  std::string clip_id;
  std::string message;
};

struct BuildReport {
  PairManifest manifest;
  std::vector<BuildError> errors;
  bool ok() const { return errors.empty(); }
};

/**
 * Indexes `root` (directories matching clip_*, each with T.png and R_*.png).
 * Invalid clips are reported and excluded; valid clips still build.
 */
BuildReport build_manifest(const std::string& root);

// Canonical JSON: sorted keys, two-space indent, LF endings. Round trips are
// byte-identical.
std::string manifest_json(const PairManifest& m);
void save_manifest(const std::string& path, const PairManifest& m);
PairManifest load_manifest(const std::string& path);

struct PairRecord {
  std::string clip_id;
  std::string reflection;
  bool exists = false;
  bool dims_ok = false;
  bool alignment_checked = false;
  bool aligned = true;
  Shift best_shift;
  std::string error;
};

struct ValidationReport {
  std::vector<PairRecord> pairs;  // clip order, then reflection order
  int total = 0;
  int ok = 0;
  int missing = 0;
  int dim_mismatches = 0;
  int misaligned = 0;
  bool all_ok() const { return ok == total; }
};

/**
 * Checks existence and dimensions per pair; with check_alignment, runs the
 * shift diagnostic on (R_k, T). I/O failures are recorded per pair, never
 * thrown. Side-effect-free and repeatable.
 */
ValidationReport validate_manifest(const PairManifest& m, const std::string& base_dir,
                                   bool check_alignment, int max_shift = 3,
                                   float delta = 0.02f);

std::string validation_report_json(const ValidationReport& r);

// Seeded clip-level partition: first ceil(train_fraction * N) shuffled clips
// train, rest test; each side keeps the original manifest order.
std::pair<PairManifest, PairManifest> split_manifest(const PairManifest& m, const SplitSpec& s);

struct PatchPair {
  Image i;
  Image t;
  std::string clip_id;
  std::string reflection;
  int x = 0;
  int y = 0;
};

/**
 * Each sample draws clip, then frame, then a shared crop offset (x before y),
 * so I and T patches are co-located. Clips smaller than `size` are skipped
 * with a warning. count = 0 yields an empty list; count < 0 is an error.
 */
std::vector<PatchPair> sample_patches(const PairManifest& m, const std::string& base_dir,
                                      int size, int count, Rng& rng,
                                      std::vector<std::string>* warnings = nullptr);

}  // namespace reflkit
