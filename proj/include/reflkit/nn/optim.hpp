// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reflkit/nn/net.hpp"

namespace reflkit::nn {

// lr(t) = lr0 * 0.5 * (1 + cos(pi * t / T)).
inline double cosine_lr(long t, long t_total, double lr0) {
  require(t_total > 0 && t >= 0 && t <= t_total, "cosine_lr: need 0 <= t <= T");
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) / static_cast<double>(t_total)));
}

/**
 * Per-parameter first/second moment buffers, allocated on first step. The
 * step counter is shared (one optimizer instance per training run).
 */
struct AdamState {
  long t = 0;
  std::vector<std::vector<float>> m, v;  // indexed like ParamStore::params
};

/**
 * Standard Adam with bias correction. A non-null `prefix` restricts the step
 * to parameters whose name starts with it (staged training keeps one state
 * per sub-network so step counts stay per-phase).
 */
inline void adam_step(ParamStore<float>& ps, AdamState& st, float lr, float beta1 = 0.9f,
                      float beta2 = 0.999f, float eps = 1e-8f, const char* prefix = nullptr) {
  if (st.m.empty()) {
    st.m.resize(ps.params.size());
    st.v.resize(ps.params.size());
    for (std::size_t i = 0; i < ps.params.size(); ++i) {
      st.m[i].assign(ps.params[i].second.size(), 0.0f);
      st.v[i].assign(ps.params[i].second.size(), 0.0f);
    }
  }
  st.t += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), static_cast<double>(st.t));
  for (std::size_t i = 0; i < ps.params.size(); ++i) {
    if (prefix != nullptr && ps.params[i].first.rfind(prefix, 0) != 0) continue;
    Tensor<float>& p = ps.params[i].second;
    require(p.grad.size() == p.size(), "adam_step: missing gradient buffer");
    float* m = st.m[i].data();
    float* v = st.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      float g = p.grad[j];
      m[j] = beta1 * m[j] + (1.0f - beta1) * g;
      v[j] = beta2 * v[j] + (1.0f - beta2) * g * g;
      float mhat = static_cast<float>(m[j] / bc1);
      float vhat = static_cast<float>(v[j] / bc2);
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace reflkit::nn
