// SPDX-License-Identifier: Apache-2.0
#include "reflkit/metrics.hpp"

#include "reflkit/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>

namespace reflkit {

namespace fs = std::filesystem;

double psnr(const Image& a, const Image& b, double peak) {
  require(a.same_shape(b) && a.channels() > 0, "psnr: dimension mismatch");
  require(peak > 0.0, "psnr: peak must be > 0");
  double se = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    se += (a.planes[c].cast<double>() - b.planes[c].cast<double>()).square().sum();
  const double n = static_cast<double>(a.channels()) * a.height() * a.width();
  const double mse = se / n;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

using PlaneD = Plane<double>;

// Valid-mode separable filtering with the same 1D kernel on rows and columns.
PlaneD filter_valid(const PlaneD& p, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  const int h = static_cast<int>(p.rows());
  const int w = static_cast<int>(p.cols());
  PlaneD rows = PlaneD::Zero(h, w - 2 * r);
  for (int t = 0; t < static_cast<int>(k.size()); ++t)
    rows += k[static_cast<std::size_t>(t)] * p.middleCols(t, w - 2 * r);
  PlaneD out = PlaneD::Zero(h - 2 * r, w - 2 * r);
  for (int t = 0; t < static_cast<int>(k.size()); ++t)
    out += k[static_cast<std::size_t>(t)] * rows.middleRows(t, h - 2 * r);
  return out;
}

std::vector<double> ssim_window_1d() {
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5.0;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require(a.same_shape(b) && a.channels() > 0, "ssim: dimension mismatch");
  require(a.height() >= 11 && a.width() >= 11, "ssim: image smaller than the 11x11 window");
  const std::vector<double> k = ssim_window_1d();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;

  double channel_sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const PlaneD pa = a.planes[c].cast<double>();
    const PlaneD pb = b.planes[c].cast<double>();
    const PlaneD mu_a = filter_valid(pa, k);
    const PlaneD mu_b = filter_valid(pb, k);
    const PlaneD m_aa = filter_valid(pa * pa, k);
    const PlaneD m_bb = filter_valid(pb * pb, k);
    const PlaneD m_ab = filter_valid(pa * pb, k);

    const PlaneD va = m_aa - mu_a.square();
    const PlaneD vb = m_bb - mu_b.square();
    const PlaneD cov = m_ab - mu_a * mu_b;
    const PlaneD num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
    const PlaneD den = (mu_a.square() + mu_b.square() + c1) * (va + vb + c2);
    channel_sum += (num / den).mean();
  }
  return channel_sum / a.channels();
}

EvalResult evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir) {
  require(fs::is_directory(pred_dir), "evaluate: not a directory: " + pred_dir);
  require(fs::is_directory(gt_dir), "evaluate: not a directory: " + gt_dir);

  auto list_images = [](const std::string& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string ext = e.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
        names.insert(e.path().filename().string());
    }
    return names;
  };
  const std::set<std::string> pred_names = list_images(pred_dir);
  const std::set<std::string> gt_names = list_images(gt_dir);

  EvalResult res;
  std::set_difference(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                      std::back_inserter(res.unmatched_pred));
  std::set_difference(gt_names.begin(), gt_names.end(), pred_names.begin(), pred_names.end(),
                      std::back_inserter(res.unmatched_gt));

  std::vector<std::string> matched;
  std::set_intersection(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                        std::back_inserter(matched));

  for (const auto& name : matched) {
    try {
      const Image p = load_image((fs::path(pred_dir) / name).string());
      const Image g = load_image((fs::path(gt_dir) / name).string());
      EvalRow row;
      row.name = name;
      row.psnr = psnr(p, g);
      row.ssim = ssim(p, g);
      res.table.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      res.failures.push_back(name + ": " + e.what());
    }
  }

  double psum = 0.0, ssum = 0.0;
  int pn = 0;
  for (const auto& row : res.table.rows) {
    ssum += row.ssim;
    if (std::isinf(row.psnr)) {
      res.table.psnr_inf_excluded += 1;
    } else {
      psum += row.psnr;
      pn += 1;
    }
  }
  res.table.mean_ssim = res.table.rows.empty() ? 0.0 : ssum / res.table.rows.size();
  res.table.mean_psnr = pn > 0 ? psum / pn
                               : (res.table.rows.empty() ? 0.0
                                                         : std::numeric_limits<double>::infinity());
  return res;
}

std::string table_csv(const EvalTable& t) {
  std::string out = "name,psnr_db,ssim\n";
  char line[256];
  for (const auto& row : t.rows) {
    std::snprintf(line, sizeof(line), "%s,%.6f,%.8f\n", row.name.c_str(), row.psnr, row.ssim);
    out += line;
  }
  return out;
}

std::string table_txt(const EvalTable& t) {
  std::size_t name_w = std::string("AVERAGE").size();
  for (const auto& row : t.rows) name_w = std::max(name_w, row.name.size());

  std::string out;
  char line[320];
  std::snprintf(line, sizeof(line), "%-*s  %12s  %10s\n", static_cast<int>(name_w), "name",
                "psnr_db", "ssim");
  out += line;
  for (const auto& row : t.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %12.6f  %10.8f\n", static_cast<int>(name_w),
                  row.name.c_str(), row.psnr, row.ssim);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-*s  %12.6f  %10.8f\n", static_cast<int>(name_w), "AVERAGE",
                t.mean_psnr, t.mean_ssim);
  out += line;
  if (t.psnr_inf_excluded > 0) {
    std::snprintf(line, sizeof(line), "(%d infinite-psnr row%s excluded from the psnr mean)\n",
                  t.psnr_inf_excluded, t.psnr_inf_excluded == 1 ? "" : "s");
    out += line;
  }
  return out;
}

}  // namespace reflkit
