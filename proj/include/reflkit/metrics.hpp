// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/image.hpp"

#include <string>
#include <vector>

namespace reflkit {

/**
 * Peak signal-to-noise ratio in dB over all samples of all channels (pooled
 * MSE), computed on stored sample values. MSE accumulates in 64-bit so the
 * result matches a direct two-loop oracle to 1e-9 relative. MSE = 0 maps to
 * +infinity.
 */
double psnr(const Image& a, const Image& b, double peak = 1.0);

/**
 * Structural similarity with the canonical constants: 11x11 Gaussian window,
 * sigma 1.5, K1 = 0.01, K2 = 0.03, peak 1. Windowed moments over valid (fully
 * interior) positions only; channel scores averaged. Requires min dimension
 * >= 11.
 */
double ssim(const Image& a, const Image& b);

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

/**
 * Benchmark table. mean_psnr averages finite rows only (the exclusion count
 * is reported); when every row is infinite the mean itself is +infinity.
 */
struct EvalTable {
  std::vector<EvalRow> rows;  // sorted by name
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  int psnr_inf_excluded = 0;
};

struct EvalResult {
  EvalTable table;
  std::vector<std::string> unmatched_pred;  // files only in the prediction dir
  std::vector<std::string> unmatched_gt;    // files only in the ground-truth dir
  std::vector<std::string> failures;        // "name: reason" for pairs that did not compute
  bool complete() const {
    return unmatched_pred.empty() && unmatched_gt.empty() && failures.empty();
  }
};

/**
 * Pairs same-named images across the two directories, computes one EvalRow
 * per pair (name order), and lists unmatched files of either side.
 */
EvalResult evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir);

// `name,psnr_db,ssim` rows; fixed formatting so reruns are byte-identical.
std::string table_csv(const EvalTable& t);

// Aligned columns with a final AVERAGE row.
std::string table_txt(const EvalTable& t);

}  // namespace reflkit
