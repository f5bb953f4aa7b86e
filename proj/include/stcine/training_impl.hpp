#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>

#include "stcine/rng.hpp"

namespace stcine::train {

namespace detail {

template <typename T>
void fill_batch(nn::Tensor<T>& input, nn::Tensor<T>& label,
                const std::vector<slicing::SliceSample>& ds, const std::vector<size_t>& which) {
  for (size_t b = 0; b < which.size(); ++b) {
    const auto& s = ds[which[b]];
    size_t plane = s.input.size();
    for (size_t i = 0; i < plane; ++i) {
      input.v[b * plane + i] = static_cast<T>(s.input.v[i]);
      label.v[b * plane + i] = static_cast<T>(s.label.v[i]);
    }
  }
}

template <typename T>
void check_dataset(const std::vector<slicing::SliceSample>& ds, const TrainConfig& cfg,
                   bool need_labels) {
  if (ds.empty()) throw std::invalid_argument("train: empty dataset");
  const auto& first = ds.front().input;
  for (const auto& s : ds) {
    if (!s.input.same_shape(first)) throw std::invalid_argument("train: inhomogeneous sample shapes");
    if (need_labels && !s.label.same_shape(s.input))
      throw std::invalid_argument("train: sample is missing its label");
  }
  bool channels = cfg.domain == slicing::DomainMode::XytChannels;
  if (channels != (first.channels > 1) && first.channels != 1 && !channels)
    throw std::invalid_argument("train: sample channels do not match the domain");
}

template <typename T>
double eval_loss(nn::UNet<T>& net, const std::vector<slicing::SliceSample>& ds, int batch_size) {
  const auto& shape = ds.front().input;
  double acc = 0.0;
  size_t done = 0;
  while (done < ds.size()) {
    size_t n = std::min<size_t>(batch_size, ds.size() - done);
    nn::Tensor<T> in(static_cast<int>(n), shape.channels, shape.rows, shape.cols);
    nn::Tensor<T> lb(static_cast<int>(n), shape.channels, shape.rows, shape.cols);
    std::vector<size_t> which(n);
    for (size_t i = 0; i < n; ++i) which[i] = done + i;
    fill_batch(in, lb, ds, which);
    nn::Tensor<T> pred = net.forward(in, nn::Mode::Eval);
    // pool per-sample squared norms so the result matches a single-batch loss
    for (size_t i = 0; i < pred.size(); ++i) {
      double d = static_cast<double>(pred.v[i]) - static_cast<double>(lb.v[i]);
      acc += d * d;
    }
    done += n;
  }
  return acc / ds.size();
}

}  // namespace detail

template <typename T>
LossTrace train(nn::UNet<T>& net, const std::vector<slicing::SliceSample>& train_ds,
                const std::vector<slicing::SliceSample>& val_ds, const TrainConfig& cfg,
                int64_t start_step, int64_t end_step) {
  cfg.validate();
  if (end_step < 0) end_step = cfg.total_backprops;
  if (start_step < 0 || start_step > end_step || end_step > cfg.total_backprops)
    throw std::invalid_argument("train: step range outside the schedule");
  detail::check_dataset<T>(train_ds, cfg, true);
  if (!val_ds.empty()) detail::check_dataset<T>(val_ds, cfg, true);
  const auto& shape = train_ds.front().input;
  if (net.config().in_channels != shape.channels)
    throw std::invalid_argument("train: network channels do not match the dataset");

  Rng shuffle_rng(derive_seed(cfg.seed, 0x5u));
  std::vector<size_t> order(train_ds.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t pos = order.size();  // forces a shuffle before the first batch

  nn::Tensor<T> input(cfg.batch_size, shape.channels, shape.rows, shape.cols);
  nn::Tensor<T> label(cfg.batch_size, shape.channels, shape.rows, shape.cols);
  std::vector<size_t> which(cfg.batch_size);

  // replay the sample stream up to start_step so a resumed run is
  // bit-identical to an uninterrupted one
  for (int64_t consumed = 0; consumed < start_step * cfg.batch_size; ++consumed) {
    if (pos == order.size()) {
      shuffle_rng.shuffle(order);
      pos = 0;
    }
    ++pos;
  }

  LossTrace trace;
  trace.train_loss.reserve(end_step - start_step);
  int64_t cadence = std::max<int64_t>(1, cfg.total_backprops / 100);

  for (int64_t step = start_step; step < end_step; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (pos == order.size()) {
        shuffle_rng.shuffle(order);
        pos = 0;
      }
      which[b] = order[pos++];
    }
    detail::fill_batch(input, label, train_ds, which);
    nn::Tensor<T> pred = net.forward(input, nn::Mode::Train);
    trace.train_loss.push_back(loss_l2(pred, label));

    nn::Tensor<T> gy(pred.n, pred.c, pred.h, pred.w);
    T inv_b = T(2) / static_cast<T>(pred.n);
    for (size_t i = 0; i < pred.size(); ++i) gy.v[i] = inv_b * (pred.v[i] - label.v[i]);
    net.zero_grads();
    net.backward(gy);
    sgd_step(net, lr_schedule(step, cfg));

    if (!val_ds.empty() && (step + 1) % cadence == 0)
      trace.val_loss.emplace_back(step, detail::eval_loss(net, val_ds, cfg.batch_size));
  }
  return trace;
}

template <typename T>
slicing::Reassembled predict_volume(nn::UNet<T>& net, const RealVolume& x_i,
                                    const TrainConfig& cfg, int window_x, int window_y,
                                    int stride) {
  auto samples = slicing::extract_for_prediction(x_i, cfg.domain, window_x, window_y, stride);
  std::vector<std::pair<slicing::SliceOrigin, slicing::Patch>> preds;
  preds.reserve(samples.size());

  size_t done = 0;
  while (done < samples.size()) {
    size_t n = std::min<size_t>(cfg.batch_size, samples.size() - done);
    const auto& shape = samples[done].input;
    // slice kinds can differ in shape (xt vs yt on non-square grids); keep
    // batches shape-homogeneous
    size_t take = 1;
    while (take < n && samples[done + take].input.same_shape(shape)) ++take;
    nn::Tensor<T> in(static_cast<int>(take), shape.channels, shape.rows, shape.cols);
    for (size_t b = 0; b < take; ++b)
      for (size_t i = 0; i < shape.size(); ++i)
        in.v[b * shape.size() + i] = static_cast<T>(samples[done + b].input.v[i]);
    nn::Tensor<T> out = net.forward(in, nn::Mode::Eval);
    for (size_t b = 0; b < take; ++b) {
      slicing::Patch p(shape.channels, shape.rows, shape.cols);
      size_t off = b * shape.size();
      if (cfg.target == Target::ResidualLearning) {
        for (size_t i = 0; i < p.size(); ++i) p.v[i] = static_cast<double>(out.v[off + i]);
      } else {
        for (size_t i = 0; i < p.size(); ++i)
          p.v[i] = samples[done + b].input.v[i] - static_cast<double>(out.v[off + i]);
      }
      preds.emplace_back(samples[done + b].origin, std::move(p));
    }
    done += take;
  }
  return slicing::reassemble(preds, x_i.nx, x_i.ny, x_i.nt);
}

// --- checkpoints ---

namespace detail {

constexpr char kCkptMagic[4] = {'S', 'T', 'C', 'N'};
constexpr uint32_t kCkptVersion = 1;

inline void wr(std::ofstream& o, const void* p, size_t n) {
  o.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void rd(std::ifstream& i, void* p, size_t n) {
  i.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::filesystem::path& path, nn::UNet<T>& net, const TrainConfig& cfg,
                     int64_t step, int nt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  detail::wr(out, detail::kCkptMagic, 4);
  uint32_t version = detail::kCkptVersion;
  detail::wr(out, &version, 4);
  int32_t fields[8] = {static_cast<int32_t>(cfg.domain), static_cast<int32_t>(cfg.target),
                       cfg.batch_size, cfg.stages, cfg.convs_per_stage, cfg.base_features,
                       nt, static_cast<int32_t>(sizeof(T))};
  detail::wr(out, fields, sizeof(fields));
  detail::wr(out, &cfg.total_backprops, 8);
  detail::wr(out, &cfg.lr_start, 8);
  detail::wr(out, &cfg.lr_end, 8);
  detail::wr(out, &cfg.seed, 8);
  detail::wr(out, &step, 8);
  auto write_tensors = [&](auto views) {
    uint32_t n = static_cast<uint32_t>(views.size());
    detail::wr(out, &n, 4);
    for (auto& v : views) {
      uint64_t sz = v.value->size();
      detail::wr(out, &sz, 8);
      detail::wr(out, v.value->data(), sz * sizeof(T));
    }
  };
  write_tensors(net.params());
  write_tensors(net.state());
  if (!out) throw std::runtime_error("checkpoint: short write to " + path.string());
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[4];
  detail::rd(in, magic, 4);
  if (!in || std::memcmp(magic, detail::kCkptMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  uint32_t version;
  detail::rd(in, &version, 4);
  if (version != detail::kCkptVersion) throw std::runtime_error("checkpoint: unsupported version");
  int32_t fields[8];
  detail::rd(in, fields, sizeof(fields));
  Checkpoint<T> ck;
  ck.cfg.domain = static_cast<slicing::DomainMode>(fields[0]);
  ck.cfg.target = static_cast<Target>(fields[1]);
  ck.cfg.batch_size = fields[2];
  ck.cfg.stages = fields[3];
  ck.cfg.convs_per_stage = fields[4];
  ck.cfg.base_features = fields[5];
  ck.nt = fields[6];
  if (fields[7] != static_cast<int32_t>(sizeof(T)))
    throw std::runtime_error("checkpoint: parameter precision mismatch");
  detail::rd(in, &ck.cfg.total_backprops, 8);
  detail::rd(in, &ck.cfg.lr_start, 8);
  detail::rd(in, &ck.cfg.lr_end, 8);
  detail::rd(in, &ck.cfg.seed, 8);
  detail::rd(in, &ck.step, 8);
  ck.net = nn::UNet<T>(make_unet_config(ck.cfg, ck.nt));
  auto read_tensors = [&](auto views) {
    uint32_t n;
    detail::rd(in, &n, 4);
    if (n != views.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
    for (auto& v : views) {
      uint64_t sz;
      detail::rd(in, &sz, 8);
      if (sz != v.value->size()) throw std::runtime_error("checkpoint: tensor size mismatch");
      detail::rd(in, v.value->data(), sz * sizeof(T));
    }
  };
  read_tensors(ck.net.params());
  read_tensors(ck.net.state());
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
  return ck;
}

}  // namespace stcine::train
