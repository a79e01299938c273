// SPDX-License-Identifier: Apache-2.0
#include "reflkit/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>

namespace reflkit::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, std::size_t n, const std::string& path) {
  require(std::fwrite(p, 1, n, f) == n, "checkpoint: short write to " + path);
}

template <typename T>
void write_pod(std::FILE* f, T v, const std::string& path) {
  write_bytes(f, &v, sizeof(v), path);
}

void read_bytes(std::FILE* f, void* p, std::size_t n, const std::string& path) {
  require(std::fread(p, 1, n, f) == n, "checkpoint: truncated file " + path);
}

template <typename T>
T read_pod(std::FILE* f, const std::string& path) {
  T v;
  read_bytes(f, &v, sizeof(v), path);
  return v;
}

constexpr char kMagic[4] = {'R', 'F', 'L', 'K'};

}  // namespace

Checkpoint Checkpoint::from_params(const ParamStore<float>& ps, const TrainConfig& cfg,
                                   std::uint64_t iteration) {
  Checkpoint c;
  c.config = cfg;
  c.iteration = iteration;
  for (const auto& [name, t] : ps.params) {
    Tensor<float> copy(t.n, t.c, t.h, t.w, /*with_grad=*/false);
    copy.data = t.data;
    c.tensors.emplace_back(name, std::move(copy));
  }
  std::sort(c.tensors.begin(), c.tensors.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return c;
}

ParamStore<float> Checkpoint::to_params() const {
  ParamStore<float> ps;
  for (const auto& [name, t] : tensors) {
    Tensor<float>& dst = ps.add(name, t.n, t.c, t.h, t.w);
    dst.data = t.data;
  }
  return ps;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  require(f != nullptr, "checkpoint: cannot open for writing: " + path);
  std::FILE* fp = f.get();

  write_bytes(fp, kMagic, 4, path);
  write_pod<std::uint32_t>(fp, ckpt.version, path);

  const TrainConfig& c = ckpt.config;
  write_pod<float>(fp, c.lr0, path);
  write_pod<std::uint32_t>(fp, c.total_iters, path);
  write_pod<std::uint32_t>(fp, c.batch, path);
  write_pod<std::uint32_t>(fp, c.patch, path);
  write_pod<float>(fp, c.gamma1, path);
  write_pod<float>(fp, c.gamma2, path);
  write_pod<float>(fp, c.beta1, path);
  write_pod<float>(fp, c.beta2, path);
  write_pod<float>(fp, c.eps, path);
  write_pod<std::uint64_t>(fp, c.seed, path);
  write_pod<std::uint8_t>(fp, c.detach_mask ? 1 : 0, path);
  write_pod<std::uint8_t>(fp, c.joint ? 1 : 0, path);
  write_pod<std::uint8_t>(fp, static_cast<std::uint8_t>(c.mask_mode), path);
  write_pod<std::uint8_t>(fp, 0, path);  // pad
  write_pod<std::uint32_t>(fp, c.log_every, path);

  write_pod<std::uint64_t>(fp, ckpt.iteration, path);

  // Sorted copy so callers need not pre-sort.
  std::vector<const std::pair<std::string, Tensor<float>>*> order;
  order.reserve(ckpt.tensors.size());
  for (const auto& kv : ckpt.tensors) order.push_back(&kv);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });

  write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(order.size()), path);
  for (const auto* kv : order) {
    const std::string& name = kv->first;
    const Tensor<float>& t = kv->second;
    write_pod<std::uint32_t>(fp, static_cast<std::uint32_t>(name.size()), path);
    write_bytes(fp, name.data(), name.size(), path);
    const std::uint32_t dims[4] = {
        static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.c),
        static_cast<std::uint32_t>(t.h), static_cast<std::uint32_t>(t.w)};
    write_pod<std::uint32_t>(fp, 4, path);
    write_bytes(fp, dims, sizeof(dims), path);
    write_bytes(fp, t.data.data(), t.data.size() * sizeof(float), path);
  }
  require(std::fflush(fp) == 0, "checkpoint: flush failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  require(f != nullptr, "checkpoint: cannot open for reading: " + path);
  std::FILE* fp = f.get();

  char magic[4];
  read_bytes(fp, magic, 4, path);
  require(std::memcmp(magic, kMagic, 4) == 0, "checkpoint: bad magic in " + path);

  Checkpoint c;
  c.version = read_pod<std::uint32_t>(fp, path);
  require(c.version == 1, "checkpoint: unsupported version in " + path);

  TrainConfig& cfg = c.config;
  cfg.lr0 = read_pod<float>(fp, path);
  cfg.total_iters = read_pod<std::uint32_t>(fp, path);
  cfg.batch = read_pod<std::uint32_t>(fp, path);
  cfg.patch = read_pod<std::uint32_t>(fp, path);
  cfg.gamma1 = read_pod<float>(fp, path);
  cfg.gamma2 = read_pod<float>(fp, path);
  cfg.beta1 = read_pod<float>(fp, path);
  cfg.beta2 = read_pod<float>(fp, path);
  cfg.eps = read_pod<float>(fp, path);
  cfg.seed = read_pod<std::uint64_t>(fp, path);
  cfg.detach_mask = read_pod<std::uint8_t>(fp, path) != 0;
  cfg.joint = read_pod<std::uint8_t>(fp, path) != 0;
  const auto mode = read_pod<std::uint8_t>(fp, path);
  require(mode <= 2, "checkpoint: bad mask mode in " + path);
  cfg.mask_mode = static_cast<MaskTargetMode>(mode);
  (void)read_pod<std::uint8_t>(fp, path);  // pad
  cfg.log_every = read_pod<std::uint32_t>(fp, path);

  c.iteration = read_pod<std::uint64_t>(fp, path);

  const auto count = read_pod<std::uint32_t>(fp, path);
  c.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(fp, path);
    require(name_len <= 4096, "checkpoint: implausible tensor name length in " + path);
    std::string name(name_len, '\0');
    read_bytes(fp, name.data(), name_len, path);
    const auto rank = read_pod<std::uint32_t>(fp, path);
    require(rank == 4, "checkpoint: unsupported tensor rank in " + path);
    std::uint32_t dims[4];
    read_bytes(fp, dims, sizeof(dims), path);
    Tensor<float> t(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                    static_cast<int>(dims[2]), static_cast<int>(dims[3]),
                    /*with_grad=*/false);
    read_bytes(fp, t.data.data(), t.data.size() * sizeof(float), path);
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  return c;
}

}  // namespace reflkit::nn
