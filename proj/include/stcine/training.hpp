#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stcine/nn/unet.hpp"
#include "stcine/slicing.hpp"
#include "stcine/volume.hpp"

namespace stcine::train {

enum class Target { ResidualLearning, ImageLearning };

const char* to_string(Target t);
Target target_from_string(const std::string& s);

struct TrainConfig {
  slicing::DomainMode domain = slicing::DomainMode::XtYt;
  Target target = Target::ImageLearning;
  int batch_size = 8;
  int64_t total_backprops = 2000;
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  uint64_t seed = 0;
  // network shape
  int stages = 3;
  int convs_per_stage = 2;
  int base_features = 16;

  void validate() const;
};

/// Desk-scale defaults: 2000 backpropagations, batch 8, base 16 features,
/// E3 C2; the spatio-temporal domain trains with a 3x higher learning rate
/// than the spatial domains (mirroring the 10x split of the full-scale
/// schedules, recalibrated for the desk geometry).
TrainConfig desk_train_config(slicing::DomainMode domain, Target target);

/// The network always carries the residual connection; learning the
/// residual means fitting the output to x (labels = ground truth), learning
/// the image means fitting the output to r_I (labels = residual).
slicing::LabelMode select_labels(const TrainConfig& cfg);

/// Geometric interpolation from lr_start (step 0) to lr_end (final step).
double lr_schedule(int64_t step, const TrainConfig& cfg);

nn::UNetConfig make_unet_config(const TrainConfig& cfg, int nt);

/// Mean over the batch of the squared Euclidean norm of (pred - label).
template <typename T>
double loss_l2(const nn::Tensor<T>& pred, const nn::Tensor<T>& label) {
  if (!pred.same_shape(label)) throw std::invalid_argument("loss: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = static_cast<double>(pred.v[i]) - static_cast<double>(label.v[i]);
    acc += d * d;
  }
  return acc / pred.n;
}

/// theta <- theta - lr * grad for every trainable parameter (batch-norm
/// running statistics are untouched).
template <typename T>
void sgd_step(nn::UNet<T>& net, double lr) {
  for (auto& p : net.params()) {
    auto& w = *p.value;
    auto& g = *p.grad;
    for (size_t i = 0; i < w.size(); ++i) w[i] -= static_cast<T>(lr * g[i]);
  }
}

struct LossTrace {
  std::vector<double> train_loss;                    ///< one entry per step
  std::vector<std::pair<int64_t, double>> val_loss;  ///< (step, loss) at checkpoints
};

void save_loss_trace(const std::filesystem::path& path, const LossTrace& trace,
                     const TrainConfig& cfg);

template <typename T>
nn::Tensor<T> to_tensor(const slicing::Patch& p) {
  nn::Tensor<T> t(1, p.channels, p.rows, p.cols);
  for (size_t i = 0; i < p.size(); ++i) t.v[i] = static_cast<T>(p.v[i]);
  return t;
}

slicing::Patch to_patch(const std::vector<double>& vals, int channels, int rows, int cols);

/// Runs steps [start_step, end_step) of the cfg.total_backprops schedule
/// (end_step < 0 means the full schedule). Resuming from a checkpoint
/// continues the learning-rate schedule at the stored step.
template <typename T>
LossTrace train(nn::UNet<T>& net, const std::vector<slicing::SliceSample>& train_ds,
                const std::vector<slicing::SliceSample>& val_ds, const TrainConfig& cfg,
                int64_t start_step = 0, int64_t end_step = -1);

/// Estimates the clean volume from x_I: strided extraction per domain,
/// eval-mode forward, estimate = output (residual learning) or
/// input - output (image learning), then mean reassembly.
template <typename T>
slicing::Reassembled predict_volume(nn::UNet<T>& net, const RealVolume& x_i,
                                    const TrainConfig& cfg, int window_x, int window_y,
                                    int stride);

// --- checkpoints: config + step + state, little-endian IEEE-754 ---

template <typename T>
void save_checkpoint(const std::filesystem::path& path, nn::UNet<T>& net, const TrainConfig& cfg,
                     int64_t step, int nt);

template <typename T>
struct Checkpoint {
  nn::UNet<T> net;
  TrainConfig cfg;
  int64_t step = 0;
  int nt = 0;
};

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace stcine::train

#include "stcine/training_impl.hpp"
