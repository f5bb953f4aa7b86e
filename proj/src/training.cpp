#include "stcine/training.hpp"

#include <cmath>
#include <stdexcept>

#include "stcine/io.hpp"

namespace stcine::train {

const char* to_string(Target t) {
  return t == Target::ResidualLearning ? "residual-learning" : "image-learning";
}

Target target_from_string(const std::string& s) {
  if (s == "residual-learning") return Target::ResidualLearning;
  if (s == "image-learning") return Target::ImageLearning;
  throw std::invalid_argument("unknown training target '" + s + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (total_backprops < 1) throw std::invalid_argument("train: total_backprops must be >= 1");
  if (!(lr_start >= lr_end) || !(lr_end > 0.0))
    throw std::invalid_argument("train: need lr_start >= lr_end > 0");
}

TrainConfig desk_train_config(slicing::DomainMode domain, Target target) {
  TrainConfig cfg;
  cfg.domain = domain;
  cfg.target = target;
  cfg.batch_size = 8;
  cfg.total_backprops = 2000;
  bool spatio_temporal = domain == slicing::DomainMode::XtYt;
  cfg.lr_start = spatio_temporal ? 3e-4 : 1e-4;
  cfg.lr_end = cfg.lr_start * 1e-2;
  cfg.stages = 3;
  cfg.convs_per_stage = 2;
  cfg.base_features = 16;
  return cfg;
}

slicing::LabelMode select_labels(const TrainConfig& cfg) {
  // residual learning fits the residual-connected output to x; image
  // learning fits it to r_I, so the trunk carries the image content
  return cfg.target == Target::ResidualLearning ? slicing::LabelMode::GroundTruth
                                                : slicing::LabelMode::Residual;
}

double lr_schedule(int64_t step, const TrainConfig& cfg) {
  if (cfg.total_backprops == 1) return cfg.lr_start;
  double frac = static_cast<double>(step) / static_cast<double>(cfg.total_backprops - 1);
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, frac);
}

nn::UNetConfig make_unet_config(const TrainConfig& cfg, int nt) {
  nn::UNetConfig u;
  u.stages = cfg.stages;
  u.convs_per_stage = cfg.convs_per_stage;
  u.base_features = cfg.base_features;
  u.residual = true;
  if (cfg.domain == slicing::DomainMode::XtYt) {
    u.pool_h = 2;
    u.pool_w = 1;  // never contract the temporal axis
    u.in_channels = u.out_channels = 1;
  } else if (cfg.domain == slicing::DomainMode::Xy) {
    u.pool_h = 2;
    u.pool_w = 2;
    u.in_channels = u.out_channels = 1;
  } else {
    u.pool_h = 2;
    u.pool_w = 2;
    u.in_channels = u.out_channels = nt;
  }
  u.validate();
  return u;
}

void save_loss_trace(const std::filesystem::path& path, const LossTrace& trace,
                     const TrainConfig& cfg) {
  io::CsvWriter csv(path);
  for (const auto* h : {"step", "lr", "train_loss", "val_loss"}) csv.cell(std::string(h));
  csv.end_row();
  size_t vi = 0;
  for (size_t s = 0; s < trace.train_loss.size(); ++s) {
    csv.cell(static_cast<int64_t>(s));
    csv.cell(lr_schedule(static_cast<int64_t>(s), cfg));
    csv.cell(trace.train_loss[s]);
    if (vi < trace.val_loss.size() && trace.val_loss[vi].first == static_cast<int64_t>(s)) {
      csv.cell(trace.val_loss[vi].second);
      ++vi;
    } else {
      csv.cell(std::string(""));
    }
    csv.end_row();
  }
}

slicing::Patch to_patch(const std::vector<double>& vals, int channels, int rows, int cols) {
  slicing::Patch p(channels, rows, cols);
  if (vals.size() != p.size()) throw std::invalid_argument("to_patch: size mismatch");
  p.v = vals;
  return p;
}

}  // namespace stcine::train
