// SPDX-License-Identifier: Apache-2.0
#include "reflkit/analysis.hpp"
#include "reflkit/compositor.hpp"
#include "reflkit/dataset.hpp"
#include "reflkit/image_io.hpp"
#include "reflkit/metrics.hpp"
#include "reflkit/nn/train.hpp"
#include "reflkit/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using namespace reflkit;

namespace {

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.height(), img.width(), 3, img.encoding);
  for (int c = 0; c < 3; ++c) out.planes[static_cast<std::size_t>(c)] = img.planes[0];
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open for writing: " + path);
  f << text;
  require(static_cast<bool>(f), "write failed: " + path);
}

struct MaxrfArgs {
  std::string reflection, transmission, out, comparison_out;
  float margin = 0.02f;
  float pre_blur = 1.0f;
  std::string smooth = "majority";
  bool exact = false;
};

int run_maxrf(const MaxrfArgs& a) {
  const Image i_img = load_image(a.reflection);
  const Image t_img = load_image(a.transmission);
  MaxRFOptions opts;
  if (a.exact) {
    opts = MaxRFOptions::exact_eq1();
  } else {
    opts.margin = a.margin;
    opts.pre_blur_sigma = a.pre_blur;
    opts.smooth =
        a.smooth == "none" ? MaxRFOptions::Smooth::none : MaxRFOptions::Smooth::majority3x3;
  }
  const MaxRFResult r = maxrf(i_img, t_img, opts);
  save_mask_png(a.out, r.mask);

  Image overlay = to_rgb(i_img);
  const PlaneF m = r.mask.cast<float>();
  overlay.planes[0] = overlay.planes[0] * (1.0f - 0.5f * m) + 0.5f * m;
  overlay.planes[1] = overlay.planes[1] * (1.0f - 0.5f * m);
  overlay.planes[2] = overlay.planes[2] * (1.0f - 0.5f * m);
  fs::path ov(a.out);
  ov.replace_extension();
  ov += ".overlay.png";
  save_png(ov.string(), overlay);

  if (!a.comparison_out.empty()) save_plane16_png(a.comparison_out, r.comparison);

  const auto positives = (r.mask != 0).count();
  std::printf("maxrf: %lld positive pixels of %lld (%.2f%%)\n",
              static_cast<long long>(positives),
              static_cast<long long>(r.mask.size()),
              100.0 * static_cast<double>(positives) / static_cast<double>(r.mask.size()));
  return 0;
}

struct DiagnoseArgs {
  std::string manifest, out;
  int max_shift = 3;
  float delta = 0.02f;
};

int run_diagnose(const DiagnoseArgs& a) {
  const PairManifest m = load_manifest(a.manifest);
  const std::string base = fs::path(a.manifest).parent_path().string();
  const ValidationReport rep = validate_manifest(m, base, true, a.max_shift, a.delta);
  write_text(a.out, validation_report_json(rep));
  std::printf("diagnose: %d pairs, %d ok, %d missing, %d dim mismatches, %d misaligned\n",
              rep.total, rep.ok, rep.missing, rep.dim_mismatches, rep.misaligned);
  for (const auto& p : rep.pairs) {
    if (!p.error.empty())
      std::fprintf(stderr, "diagnose: %s / %s: %s\n", p.clip_id.c_str(), p.reflection.c_str(),
                   p.error.c_str());
    else if (p.alignment_checked && !p.aligned)
      std::fprintf(stderr, "diagnose: %s / %s: misaligned, best shift (%d, %d)\n",
                   p.clip_id.c_str(), p.reflection.c_str(), p.best_shift.dx, p.best_shift.dy);
  }
  return rep.all_ok() ? 0 : 1;
}

struct ComposeArgs {
  std::string transmission, object, out_dir;
  std::uint64_t seed = 0;
  float ambient = 0.12f;
  float alpha = 0.5f;
  float blur = 2.5f;
  int count = 1;
  bool alpha_given = false;
};

int run_compose(const ComposeArgs& a) {
  const Image t_img = load_image(a.transmission);
  std::optional<Image> obj;
  if (!a.object.empty()) obj = load_image(a.object);

  fs::create_directories(a.out_dir);
  for (int k = 0; k < a.count; ++k) {
    ReflectionSpec spec;
    spec.ambient_gain = a.ambient;
    spec.local_alpha = obj ? a.alpha : 0.0f;
    spec.local_blur = a.blur;
    spec.seed = a.seed + static_cast<std::uint64_t>(k);
    const ComposedPair pair = compose_pair(t_img, spec, obj ? &*obj : nullptr);

    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d", k);
    const fs::path dir = fs::path(a.out_dir) / name;
    fs::create_directories(dir);
    save_png((dir / "I.png").string(), pair.i);
    save_png((dir / "T.png").string(), pair.t);
    save_mask_png((dir / "mask.png").string(), pair.ref_support);

    nlohmann::json j;
    j["alpha"] = pair.spec_used.local_alpha;
    j["ambient_cells"] = pair.spec_used.ambient_cells;
    j["ambient_gain"] = pair.spec_used.ambient_gain;
    j["blur"] = pair.spec_used.local_blur;
    j["clipped_pixels"] = pair.clipped_count;
    j["placement"] = "random";
    j["seed"] = pair.spec_used.seed;
    write_text((dir / "spec.json").string(), j.dump(2) + "\n");
  }
  std::printf("compose: wrote %d sample%s to %s\n", a.count, a.count == 1 ? "" : "s",
              a.out_dir.c_str());
  return 0;
}

struct DatasetBuildArgs {
  std::string root, out;
};

int run_dataset_build(const DatasetBuildArgs& a) {
  const BuildReport report = build_manifest(a.root);
  save_manifest(a.out, report.manifest);
  for (const auto& e : report.errors)
    std::fprintf(stderr, "dataset build: %s: %s\n", e.clip_id.c_str(), e.message.c_str());
  std::printf("dataset build: %zu clip%s indexed, %zu error%s\n", report.manifest.clips.size(),
              report.manifest.clips.size() == 1 ? "" : "s", report.errors.size(),
              report.errors.size() == 1 ? "" : "s");
  return report.ok() ? 0 : 1;
}

struct DatasetValidateArgs {
  std::string manifest;
  bool check_alignment = false;
};

int run_dataset_validate(const DatasetValidateArgs& a) {
  const PairManifest m = load_manifest(a.manifest);
  const fs::path base = fs::path(a.manifest).parent_path();
  const ValidationReport rep = validate_manifest(m, base.string(), a.check_alignment);
  write_text((base / "validation.json").string(), validation_report_json(rep));
  std::printf("dataset validate: %d pairs, %d ok, %d missing, %d dim mismatches, %d misaligned\n",
              rep.total, rep.ok, rep.missing, rep.dim_mismatches, rep.misaligned);
  for (const auto& p : rep.pairs)
    if (!p.error.empty() || !p.dims_ok || !p.aligned)
      std::fprintf(stderr, "dataset validate: %s / %s: %s\n", p.clip_id.c_str(),
                   p.reflection.c_str(),
                   !p.error.empty()       ? p.error.c_str()
                   : !p.dims_ok           ? "dimension mismatch"
                                          : "misaligned");
  return rep.all_ok() ? 0 : 1;
}

struct DatasetSplitArgs {
  std::string manifest, out_dir;
  double fraction = 0.5;
  std::uint64_t seed = 0;
};

PairManifest rebase_manifest(const PairManifest& m, const fs::path& from_base,
                             const fs::path& to_base) {
  const fs::path from = fs::weakly_canonical(fs::absolute(from_base));
  const fs::path to = fs::weakly_canonical(fs::absolute(to_base));
  if (from == to) return m;
  PairManifest out = m;
  for (auto& clip : out.clips) {
    clip.transmission = fs::relative(from / clip.transmission, to).generic_string();
    for (auto& r : clip.reflections) r = fs::relative(from / r, to).generic_string();
  }
  return out;
}

int run_dataset_split(const DatasetSplitArgs& a) {
  const PairManifest m = load_manifest(a.manifest);
  SplitSpec spec;
  spec.train_fraction = a.fraction;
  spec.seed = a.seed;
  const auto [train, test] = split_manifest(m, spec);

  fs::create_directories(a.out_dir);
  const fs::path base = fs::path(a.manifest).parent_path();
  save_manifest((fs::path(a.out_dir) / "train.json").string(),
                rebase_manifest(train, base, a.out_dir));
  save_manifest((fs::path(a.out_dir) / "test.json").string(),
                rebase_manifest(test, base, a.out_dir));
  std::printf("dataset split: %zu train / %zu test clips\n", train.clips.size(),
              test.clips.size());
  return 0;
}

struct DatasetPatchesArgs {
  std::string manifest, out_dir;
  int size = 320;
  int count = 0;
  std::uint64_t seed = 0;
};

int run_dataset_patches(const DatasetPatchesArgs& a) {
  const PairManifest m = load_manifest(a.manifest);
  const std::string base = fs::path(a.manifest).parent_path().string();
  Rng rng(a.seed);
  std::vector<std::string> warnings;
  const std::vector<PatchPair> pairs = sample_patches(m, base, a.size, a.count, rng, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "dataset patches: %s\n", w.c_str());

  fs::create_directories(a.out_dir);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "patch_%04zu", k);
    save_png((fs::path(a.out_dir) / (std::string(stem) + "_I.png")).string(), pairs[k].i);
    save_png((fs::path(a.out_dir) / (std::string(stem) + "_T.png")).string(), pairs[k].t);
  }
  std::printf("dataset patches: wrote %zu pair%s to %s\n", pairs.size(),
              pairs.size() == 1 ? "" : "s", a.out_dir.c_str());
  return 0;
}

struct EvaluateArgs {
  std::string pred, gt, out_prefix;
};

int run_evaluate(const EvaluateArgs& a) {
  const EvalResult res = evaluate_dirs(a.pred, a.gt);
  write_text(a.out_prefix + "report.csv", table_csv(res.table));
  write_text(a.out_prefix + "report.txt", table_txt(res.table));
  std::fputs(table_txt(res.table).c_str(), stdout);
  for (const auto& n : res.unmatched_pred)
    std::fprintf(stderr, "evaluate: no ground truth for %s\n", n.c_str());
  for (const auto& n : res.unmatched_gt)
    std::fprintf(stderr, "evaluate: no prediction for %s\n", n.c_str());
  for (const auto& f : res.failures) std::fprintf(stderr, "evaluate: %s\n", f.c_str());
  return res.complete() ? 0 : 1;
}

struct TrainToyArgs {
  std::string source, manifest, out_ckpt, log;
  std::uint32_t iters = 0;
  std::uint64_t seed = 0;
  float lr = 0.0006f;
  float gamma1 = 0.00005f;
  float gamma2 = 0.02f;
  int patch = 0;  // 0 = per-source default
  int batch = 4;
  int pool = 64;
  std::string mask_mode = "cleaned";
  bool no_detach = false;
  bool staged = false;
};

int run_train_toy(const TrainToyArgs& a) {
  nn::TrainConfig cfg;
  cfg.lr0 = a.lr;
  cfg.total_iters = a.iters;
  cfg.batch = static_cast<std::uint32_t>(a.batch);
  cfg.patch = static_cast<std::uint32_t>(a.patch > 0 ? a.patch
                                         : a.source == "synthetic" ? 64
                                                                   : 320);
  cfg.gamma1 = a.gamma1;
  cfg.gamma2 = a.gamma2;
  cfg.seed = a.seed;
  cfg.detach_mask = !a.no_detach;
  cfg.joint = !a.staged;
  cfg.mask_mode = a.mask_mode == "exact"  ? nn::MaskTargetMode::exact
                  : a.mask_mode == "zero" ? nn::MaskTargetMode::zero
                                          : nn::MaskTargetMode::cleaned;

  std::unique_ptr<nn::PatchSource> source;
  if (a.source == "synthetic") {
    source = std::make_unique<nn::PoolSource>(
        make_toy_pool(a.pool, static_cast<int>(cfg.patch), cfg.seed + 1));
  } else {
    const PairManifest m = load_manifest(a.manifest);
    const std::string base = fs::path(a.manifest).parent_path().string();
    source = std::make_unique<nn::ManifestSource>(m, base, static_cast<int>(cfg.patch),
                                                  cfg.seed + 1);
  }

  const nn::TrainResult res = nn::train(cfg, *source);
  save_checkpoint(a.out_ckpt, res.checkpoint);
  nn::write_log_csv(a.log, res.log);
  const nn::LogRow& first = res.log.front();
  const nn::LogRow& last = res.log.back();
  std::printf("train-toy: iter %u losses (%.6g, %.6g) -> iter %u losses (%.6g, %.6g)\n",
              first.iter, first.loss_dnet, first.loss_rnet, last.iter, last.loss_dnet,
              last.loss_rnet);
  return 0;
}

struct InferArgs {
  std::string ckpt, input, out, mask_out;
};

int run_infer(const InferArgs& a) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(a.ckpt);
  const Image input = to_rgb(load_image(a.input));
  const nn::InferResult r = nn::infer(ckpt, input);
  save_png(a.out, r.that);
  save_png(a.mask_out, r.mask);
  std::printf("infer: wrote %s and %s\n", a.out.c_str(), a.mask_out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflkit: reflection localization, synthesis, and removal toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  MaxrfArgs mx;
  auto* sc_maxrf =
      app.add_subcommand("maxrf", "Extract the local-reflection mask from an aligned pair");
  sc_maxrf->add_option("--reflection", mx.reflection, "Reflection image I")->required();
  sc_maxrf->add_option("--transmission", mx.transmission, "Transmission image T")->required();
  sc_maxrf->add_option("--out", mx.out, "Output mask PNG (overlay written alongside)")
      ->required();
  sc_maxrf->add_option("--margin", mx.margin, "Gradient comparison margin");
  sc_maxrf->add_option("--pre-blur", mx.pre_blur, "Gaussian sigma before gradients");
  sc_maxrf->add_option("--smooth", mx.smooth, "Mask smoothing: none|majority")
      ->check(CLI::IsMember({"none", "majority"}));
  sc_maxrf->add_flag("--exact-eq1", mx.exact,
                     "Raw comparison: no blur, zero margin, no smoothing");
  sc_maxrf->add_option("--comparison-out", mx.comparison_out,
                       "Write the signed comparison plane (16-bit + JSON sidecar)");
  sc_maxrf->callback([&] { rc = run_maxrf(mx); });

  DiagnoseArgs dg;
  auto* sc_diag = app.add_subcommand("diagnose", "Check manifest pairs for misalignment");
  sc_diag->add_option("--manifest", dg.manifest, "Manifest JSON")->required();
  sc_diag->add_option("--max-shift", dg.max_shift, "Shift search radius in pixels");
  sc_diag->add_option("--delta", dg.delta, "Alignment tolerance on the score improvement");
  sc_diag->add_option("--out", dg.out, "Report JSON path")->required();
  sc_diag->callback([&] { rc = run_diagnose(dg); });

  ComposeArgs cp;
  auto* sc_comp = app.add_subcommand("compose", "Generate synthetic aligned pairs");
  sc_comp->add_option("--transmission", cp.transmission, "Transmission image")->required();
  sc_comp->add_option("--object", cp.object, "Virtual object image for the local layer");
  sc_comp->add_option("--seed", cp.seed, "Base seed (sample k uses seed + k)");
  sc_comp->add_option("--ambient", cp.ambient, "Ambient gain g0");
  sc_comp->add_option("--alpha", cp.alpha, "Local layer opacity");
  sc_comp->add_option("--blur", cp.blur, "Local layer Gaussian sigma");
  sc_comp->add_option("--count", cp.count, "Number of samples");
  sc_comp->add_option("--out-dir", cp.out_dir, "Output directory")->required();
  sc_comp->callback([&] {
    cp.alpha_given = sc_comp->count("--alpha") > 0;
    if (cp.object.empty() && cp.alpha_given && cp.alpha > 0.0f)
      throw CLI::ValidationError("compose", "--alpha > 0 requires --object");
    rc = run_compose(cp);
  });

  auto* sc_data = app.add_subcommand("dataset", "Manifest pipeline tools");
  sc_data->require_subcommand(1);

  DatasetBuildArgs db;
  auto* sc_build = sc_data->add_subcommand("build", "Index clip_*/ directories into a manifest");
  sc_build->add_option("--root", db.root, "Dataset root directory")->required();
  sc_build->add_option("--out", db.out, "Manifest JSON path")->required();
  sc_build->callback([&] { rc = run_dataset_build(db); });

  DatasetValidateArgs dv;
  auto* sc_val = sc_data->add_subcommand("validate", "Check manifest files and dimensions");
  sc_val->add_option("--manifest", dv.manifest, "Manifest JSON")->required();
  sc_val->add_flag("--check-alignment", dv.check_alignment, "Also run the shift diagnostic");
  sc_val->callback([&] { rc = run_dataset_validate(dv); });

  DatasetSplitArgs dsp;
  auto* sc_split = sc_data->add_subcommand("split", "Seeded clip-level train/test split");
  sc_split->add_option("--manifest", dsp.manifest, "Manifest JSON")->required();
  sc_split->add_option("--fraction", dsp.fraction, "Train fraction in (0, 1)")->required();
  sc_split->add_option("--seed", dsp.seed, "Shuffle seed");
  sc_split->add_option("--out-dir", dsp.out_dir, "Directory for train.json/test.json")
      ->required();
  sc_split->callback([&] { rc = run_dataset_split(dsp); });

  DatasetPatchesArgs dpa;
  auto* sc_patches = sc_data->add_subcommand("patches", "Sample co-located patch pairs");
  sc_patches->add_option("--manifest", dpa.manifest, "Manifest JSON")->required();
  sc_patches->add_option("--size", dpa.size, "Patch size in pixels");
  sc_patches->add_option("--count", dpa.count, "Number of pairs")->required();
  sc_patches->add_option("--seed", dpa.seed, "Sampling seed");
  sc_patches->add_option("--out-dir", dpa.out_dir, "Output directory")->required();
  sc_patches->callback([&] { rc = run_dataset_patches(dpa); });

  EvaluateArgs ev;
  auto* sc_eval = app.add_subcommand("evaluate", "PSNR/SSIM table over paired directories");
  sc_eval->add_option("--pred", ev.pred, "Prediction directory")->required();
  sc_eval->add_option("--gt", ev.gt, "Ground-truth directory")->required();
  sc_eval->add_option("--out-prefix", ev.out_prefix, "Prefix for report.csv / report.txt")
      ->required();
  sc_eval->callback([&] { rc = run_evaluate(ev); });

  TrainToyArgs tt;
  auto* sc_train = app.add_subcommand("train-toy", "Train the toy detect-then-remove cascade");
  sc_train->add_option("--source", tt.source, "Data source: synthetic|manifest")
      ->required()
      ->check(CLI::IsMember({"synthetic", "manifest"}));
  sc_train->add_option("--manifest", tt.manifest, "Manifest JSON (manifest source)");
  sc_train->add_option("--iters", tt.iters, "Total iterations")->required();
  sc_train->add_option("--seed", tt.seed, "Training seed");
  sc_train->add_option("--lr", tt.lr, "Initial learning rate");
  sc_train->add_option("--gamma1", tt.gamma1, "TV weight in the detection loss");
  sc_train->add_option("--gamma2", tt.gamma2, "Feature weight in the removal loss");
  sc_train->add_option("--patch", tt.patch, "Patch size (default 64 synthetic, 320 manifest)");
  sc_train->add_option("--batch", tt.batch, "Batch size");
  sc_train->add_option("--pool", tt.pool, "Synthetic pool size");
  sc_train->add_option("--mask-mode", tt.mask_mode, "Detection target: cleaned|exact|zero")
      ->check(CLI::IsMember({"cleaned", "exact", "zero"}));
  sc_train->add_flag("--no-detach-mask", tt.no_detach,
                     "Let the removal loss backprop into the detector");
  sc_train->add_flag("--staged", tt.staged,
                     "Train detector first, then remover (default is joint)");
  sc_train->add_option("--out-ckpt", tt.out_ckpt, "Checkpoint path")->required();
  sc_train->add_option("--log", tt.log, "Training log CSV path")->required();
  sc_train->callback([&] {
    if (tt.source == "manifest" && tt.manifest.empty())
      throw CLI::ValidationError("train-toy", "--source manifest requires --manifest");
    rc = run_train_toy(tt);
  });

  InferArgs inf;
  auto* sc_infer = app.add_subcommand("infer", "Run a checkpoint on one image");
  sc_infer->add_option("--ckpt", inf.ckpt, "Checkpoint file")->required();
  sc_infer->add_option("--input", inf.input, "Input image")->required();
  sc_infer->add_option("--out", inf.out, "Restored image PNG")->required();
  sc_infer->add_option("--mask-out", inf.mask_out, "Estimated mask PNG")->required();
  sc_infer->callback([&] { rc = run_infer(inf); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
