// SPDX-License-Identifier: Apache-2.0
#include "reflkit/nn/train.hpp"

#include "reflkit/analysis.hpp"
#include "reflkit/nn/loss.hpp"
#include "reflkit/nn/optim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace reflkit::nn {

PoolSource::PoolSource(std::vector<ComposedPair> pool) : pool_(std::move(pool)) {
  require(!pool_.empty(), "train: empty data source");
}

void PoolSource::next_batch(int batch, TrainBatch& out) {
  out.i.clear();
  out.t.clear();
  out.index.clear();
  for (int k = 0; k < batch; ++k) {
    const int idx = static_cast<int>(cursor_ % pool_.size());
    out.i.push_back(pool_[static_cast<std::size_t>(idx)].i);
    out.t.push_back(pool_[static_cast<std::size_t>(idx)].t);
    out.index.push_back(idx);
    cursor_ += 1;
  }
}

ManifestSource::ManifestSource(PairManifest m, std::string base_dir, int patch,
                               std::uint64_t seed)
    : m_(std::move(m)), base_(std::move(base_dir)), patch_(patch), rng_(seed) {
  bool any = false;
  for (const auto& clip : m_.clips)
    any = any || (clip.width >= patch_ && clip.height >= patch_);
  require(any, "train: empty data source (no clip fits the patch size)");
}

void ManifestSource::next_batch(int batch, TrainBatch& out) {
  out.i.clear();
  out.t.clear();
  out.index.clear();
  std::vector<PatchPair> drawn = sample_patches(m_, base_, patch_, batch, rng_);
  for (auto& pp : drawn) {
    out.i.push_back(std::move(pp.i));
    out.t.push_back(std::move(pp.t));
    out.index.push_back(-1);
  }
}

Tensor<float> images_to_tensor(const std::vector<Image>& imgs) {
  require(!imgs.empty(), "images_to_tensor: empty batch");
  const int n = static_cast<int>(imgs.size());
  const int h = imgs[0].height();
  const int w = imgs[0].width();
  Tensor<float> t(n, 3, h, w);
  for (int in = 0; in < n; ++in) {
    require(imgs[static_cast<std::size_t>(in)].channels() == 3 &&
                imgs[static_cast<std::size_t>(in)].height() == h &&
                imgs[static_cast<std::size_t>(in)].width() == w,
            "images_to_tensor: shape mismatch");
    for (int c = 0; c < 3; ++c)
      std::copy_n(imgs[static_cast<std::size_t>(in)].planes[static_cast<std::size_t>(c)].data(),
                  static_cast<std::size_t>(h) * w,
                  t.data.data() + ((static_cast<std::size_t>(in) * 3 + c) * h) * w);
  }
  return t;
}

Tensor<float> mask_target(const Image& i, const Image& t, MaskTargetMode mode) {
  Tensor<float> out(1, 1, i.height(), i.width());
  if (mode == MaskTargetMode::zero) return out;
  const MaxRFOptions opts =
      mode == MaskTargetMode::exact ? MaxRFOptions::exact_eq1() : MaxRFOptions{};
  const ReflectionMask mask = maxrf(i, t, opts).mask;
  for (int iy = 0; iy < i.height(); ++iy)
    for (int ix = 0; ix < i.width(); ++ix)
      out.at(0, 0, iy, ix) = static_cast<float>(mask(iy, ix));
  return out;
}

namespace {

void check_config(const TrainConfig& cfg) {
  require(cfg.lr0 > 0.0f && cfg.total_iters > 0 && cfg.batch > 0 && cfg.patch > 0,
          "train: config fields must be positive");
  require(cfg.gamma1 >= 0.0f && cfg.gamma2 >= 0.0f, "train: gamma values must be >= 0");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, PatchSource& source) {
  check_config(cfg);

  ParamStore<float> ps;
  Rng rng_init(cfg.seed);
  cascade_init(ps, rng_init);
  ps.init_seed = cfg.seed;

  AdamState adam_rd, adam_rr, adam_all;
  RdWork<float> rdw;
  RrWork<float> rrw;
  GradientPyramid<float> phi;

  const int pool_n = source.pool_size();
  std::vector<Tensor<float>> target_cache(
      pool_n > 0 ? static_cast<std::size_t>(pool_n) : 0);
  std::vector<bool> target_ready(target_cache.size(), false);

  TrainResult res;
  TrainBatch batch;
  Tensor<float> m_target, dmhat, dthat;
  const std::uint32_t phase1_end = (cfg.total_iters + 1) / 2;

  for (std::uint32_t iter = 1; iter <= cfg.total_iters; ++iter) {
    const double lr = cosine_lr(static_cast<long>(iter) - 1,
                                static_cast<long>(cfg.total_iters), cfg.lr0);
    source.next_batch(static_cast<int>(cfg.batch), batch);
    Tensor<float> I = images_to_tensor(batch.i);
    Tensor<float> T = images_to_tensor(batch.t);

    if (m_target.n != I.n || m_target.h != I.h || m_target.w != I.w) {
      m_target = Tensor<float>(I.n, 1, I.h, I.w);
      dmhat = m_target;
      dthat = Tensor<float>(I.n, 3, I.h, I.w);
    }
    for (int b = 0; b < I.n; ++b) {
      const int idx = batch.index[static_cast<std::size_t>(b)];
      Tensor<float> one;
      if (idx >= 0) {
        if (!target_ready[static_cast<std::size_t>(idx)]) {
          target_cache[static_cast<std::size_t>(idx)] =
              mask_target(batch.i[static_cast<std::size_t>(b)],
                          batch.t[static_cast<std::size_t>(b)], cfg.mask_mode);
          target_ready[static_cast<std::size_t>(idx)] = true;
        }
        one = target_cache[static_cast<std::size_t>(idx)];
      } else {
        one = mask_target(batch.i[static_cast<std::size_t>(b)],
                          batch.t[static_cast<std::size_t>(b)], cfg.mask_mode);
      }
      std::copy_n(one.data.data(), one.size(),
                  m_target.data.data() + static_cast<std::size_t>(b) * one.size());
    }

    if (iter == 1) {
      res.first_batch_i = I;
      res.first_batch_t = T;
    }

    const Tensor<float>& mhat = rdnet_forward(ps, I, rdw);
    std::fill(dmhat.data.begin(), dmhat.data.end(), 0.0f);
    const double ld = loss_dnet(mhat, m_target, cfg.gamma1, &dmhat);

    const Tensor<float>& that = rrnet_forward(ps, I, mhat, rrw);
    std::fill(dthat.data.begin(), dthat.data.end(), 0.0f);
    const double lr_loss = loss_rnet(that, T, cfg.gamma2, &dthat, phi);

    if (!std::isfinite(ld) || !std::isfinite(lr_loss))
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(iter));

    ps.zero_grads();
    const bool staged_phase1 = !cfg.joint && iter <= phase1_end;
    const bool staged_phase2 = !cfg.joint && iter > phase1_end;
    if (!staged_phase1) {
      // Staged phase 2 freezes the detector, so the mask is always detached
      // there; joint mode honors the config flag.
      const bool detach = staged_phase2 || cfg.detach_mask;
      rrnet_backward(ps, dthat, rrw, detach);
      if (!detach)
        for (std::size_t i = 0; i < dmhat.size(); ++i) dmhat.data[i] += rrw.dmhat.data[i];
    }
    if (!staged_phase2) rdnet_backward(ps, dmhat, rdw);

    if (cfg.joint) {
      adam_step(ps, adam_all, static_cast<float>(lr), cfg.beta1, cfg.beta2, cfg.eps);
    } else if (staged_phase1) {
      adam_step(ps, adam_rd, static_cast<float>(lr), cfg.beta1, cfg.beta2, cfg.eps, "rdnet.");
    } else {
      adam_step(ps, adam_rr, static_cast<float>(lr), cfg.beta1, cfg.beta2, cfg.eps, "rrnet.");
    }

    if (iter == 1 || iter == cfg.total_iters || iter % cfg.log_every == 0)
      res.log.push_back({iter, lr, ld, lr_loss});
  }

  res.checkpoint = Checkpoint::from_params(ps, cfg, cfg.total_iters);
  return res;
}

void write_log_csv(const std::string& path, const std::vector<LogRow>& log) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "train: cannot open log file " + path);
  f << "iter,lr,loss_dnet,loss_rnet\n";
  char line[160];
  for (const auto& row : log) {
    std::snprintf(line, sizeof(line), "%u,%.10g,%.10g,%.10g\n", row.iter, row.lr,
                  row.loss_dnet, row.loss_rnet);
    f << line;
  }
  require(static_cast<bool>(f), "train: log write failed for " + path);
}

InferResult infer(const Checkpoint& ckpt, const Image& input) {
  require(input.channels() == 3, "infer: input must be RGB");
  ParamStore<float> ps = ckpt.to_params();

  Tensor<float> I(1, 3, input.height(), input.width());
  for (int c = 0; c < 3; ++c)
    std::copy_n(input.planes[static_cast<std::size_t>(c)].data(),
                static_cast<std::size_t>(input.height()) * input.width(),
                I.data.data() + static_cast<std::size_t>(c) * input.height() * input.width());

  RdWork<float> rdw;
  RrWork<float> rrw;
  const Tensor<float>& mhat = rdnet_forward(ps, I, rdw);
  const Tensor<float>& that = rrnet_forward(ps, I, mhat, rrw);

  InferResult out;
  out.mask = Image(input.height(), input.width(), 1, Encoding::srgb);
  std::copy_n(mhat.data.data(), mhat.size(), out.mask.planes[0].data());
  out.that = Image(input.height(), input.width(), 3, Encoding::srgb);
  for (int c = 0; c < 3; ++c)
    std::copy_n(that.data.data() + static_cast<std::size_t>(c) * input.height() * input.width(),
                static_cast<std::size_t>(input.height()) * input.width(),
                out.that.planes[static_cast<std::size_t>(c)].data());
  return out;
}

}  // namespace reflkit::nn
