#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stcine/metrics.hpp"
#include "stcine/training.hpp"
#include "stcine/volume.hpp"

namespace stcine::cli {

/// Acquisition geometry; "desk" keeps everything laptop-sized, "full"
/// matches the 320 x 320 x 30 setting with 1130 spokes.
struct GeometryProfile {
  std::string name;
  int nx, ny, nt;
  int n_spokes;
  int samples_per_spoke;
  double k_max;  ///< cycles per FOV
  int crop;      ///< border crop for training samples
  int stride;    ///< reassembly window stride
};

GeometryProfile desk_profile();
GeometryProfile full_profile();
GeometryProfile profile_by_name(const std::string& name);

/// Phantom seed used by cmd_generate for a given subject/slice, so other
/// experiments can regenerate exactly the same phantom.
uint64_t subject_slice_seed(uint64_t master, int subject, int slice_z);

struct GenerateOptions {
  GeometryProfile geom = desk_profile();
  int n_subjects = 1;
  int nz = 1;
  uint64_t seed = 0;
  double rotation = 0.0;  ///< radians; rotates phantom and trajectory coherently
  std::filesystem::path out_dir;
};

struct GeneratedSlice {
  int subject, slice_z;
  std::filesystem::path dir;
};

std::vector<GeneratedSlice> cmd_generate(const GenerateOptions& opt);

/// Loads the (input, ground truth) volume pairs of the listed subjects from
/// a generated dataset directory.
std::vector<slicing::VolumePair> load_pairs(const std::filesystem::path& data_dir,
                                            const std::vector<int>& subjects);

struct TrainOptions {
  std::filesystem::path data_dir;
  std::vector<int> train_subjects;
  std::vector<int> val_subjects;
  train::TrainConfig cfg;
  GeometryProfile geom = desk_profile();
  std::filesystem::path out_dir;
  std::filesystem::path resume;   ///< optional checkpoint to continue from
  int64_t stop_after = 0;         ///< checkpoint mid-schedule after this step (0 = full run)
};

struct TrainOutput {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  double first_loss = 0.0;
  double final_loss = 0.0;
};

TrainOutput cmd_train(const TrainOptions& opt);

struct ReconstructOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path volume;  ///< input x_I (.stv)
  std::filesystem::path reference;  ///< optional ground truth for metrics
  GeometryProfile geom = desk_profile();
  std::filesystem::path out_dir;
};

struct ReconstructOutput {
  std::filesystem::path estimate;
  RealVolume estimate_volume;
  metrics::MetricReport report;  ///< valid only when a reference was given
  bool has_report = false;
  double seconds = 0.0;
};

ReconstructOutput cmd_reconstruct(const ReconstructOptions& opt);

struct HomologyOptions {
  std::filesystem::path data_dir;
  std::vector<int> subjects;
  int patch_count = 400;
  int patch_size = 12;
  int repeats = 10;
  int r_points = 200;
  uint64_t seed = 0;
  std::filesystem::path out_dir;
};

struct HomologyOutput {
  std::vector<double> r_grid;
  std::vector<double> xy_img, xy_res, xtyt_img, xtyt_res;
  std::filesystem::path csv;
};

HomologyOutput cmd_homology(const HomologyOptions& opt);

struct RotationOptions {
  uint64_t phantom_seed = 0;    ///< held-out subject to regenerate per angle
  std::vector<double> angles_deg;
  std::filesystem::path checkpoint_xy;
  std::filesystem::path checkpoint_xtyt;
  GeometryProfile geom = desk_profile();
  std::filesystem::path out_dir;
};

struct RotationRow {
  double angle_deg;
  std::string model;
  metrics::MetricReport report;
};

std::vector<RotationRow> cmd_rotation_experiment(const RotationOptions& opt);

struct LimitedDataOptions {
  std::filesystem::path data_dir;
  std::vector<int> n_list;      ///< subject counts to train with
  int test_subject = 0;
  train::TrainConfig cfg;
  GeometryProfile geom = desk_profile();
  std::filesystem::path out_dir;
};

struct LimitedDataRow {
  int n_subjects;
  metrics::MetricReport report;
};

std::vector<LimitedDataRow> cmd_limited_data(const LimitedDataOptions& opt);

/// Shared helper: reconstruct x_I with a checkpoint and optionally score it.
ReconstructOutput reconstruct_volume(const std::filesystem::path& checkpoint,
                                     const RealVolume& x_i, const RealVolume* ref,
                                     const GeometryProfile& geom);

void append_metrics_csv(const std::filesystem::path& path, const std::string& experiment,
                        const std::string& config, int n_subjects, double rotation_deg,
                        const metrics::MetricReport& rep);

}  // namespace stcine::cli
