#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stcine/rng.hpp"
#include "stcine/volume.hpp"

namespace stcine::slicing {

enum class SliceKind { XyFrame, XtSlice, YtSlice, XytChannels };
enum class DomainMode { Xy, XtYt, XytChannels };
enum class LabelMode { GroundTruth, Residual };

const char* to_string(SliceKind k);
const char* to_string(DomainMode m);
const char* to_string(LabelMode m);
DomainMode domain_from_string(const std::string& s);
LabelMode label_mode_from_string(const std::string& s);

/// Channel stack of equally shaped 2D arrays (channels = 1 except for the
/// sequence-as-channels perspective).
struct Patch {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Patch() = default;
  Patch(int ch, int r, int c) : channels(ch), rows(r), cols(c), v(static_cast<size_t>(ch) * r * c) {}
  double& at(int ch, int r, int c) { return v[(static_cast<size_t>(ch) * rows + r) * cols + c]; }
  double at(int ch, int r, int c) const { return v[(static_cast<size_t>(ch) * rows + r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Patch& o) const {
    return channels == o.channels && rows == o.rows && cols == o.cols;
  }
};

/// Where a sample came from and where its prediction goes back.
///   XyFrame:     index = t,  off0/off1 = x/y window offsets, patch rows = y
///   XtSlice:     index = y,  off0 = x window offset, patch rows = x, cols = t
///   YtSlice:     index = x,  off0 = y window offset, patch rows = y, cols = t
///   XytChannels: off0/off1 = x/y window offsets, channels = t
struct SliceOrigin {
  int subject = 0;
  int slice_z = 0;
  SliceKind kind = SliceKind::XyFrame;
  int index = 0;
  int off0 = 0;
  int off1 = 0;
};

struct SliceSample {
  SliceOrigin origin;
  Patch input;
  Patch label;  ///< empty (channels == 0) for prediction-only samples
};

struct DatasetSpec {
  DomainMode mode = DomainMode::XtYt;
  int crop = 0;    ///< pixels removed per border in x and y (never t)
  int stride = 1;  ///< reassembly window stride
  LabelMode label_mode = LabelMode::Residual;
};

struct VolumePair {
  RealVolume input;         ///< artefact-laden x_I
  RealVolume ground_truth;  ///< x
  int subject = 0;
  int slice_z = 0;
};

/// r_I = x_I - x, pointwise.
RealVolume compute_residual(const RealVolume& x_i, const RealVolume& x);

/// Spatio-temporal fibre at fixed y (rows = x, cols = t).
Mat<double> extract_xt(const RealVolume& vol, int y);
/// Spatio-temporal fibre at fixed x (rows = y, cols = t).
Mat<double> extract_yt(const RealVolume& vol, int x);

std::vector<SliceSample> build_dataset(const std::vector<VolumePair>& pairs,
                                       const DatasetSpec& spec);

/// Closed-form sample counts for n subjects with nz slices each.
struct DatasetCounts {
  int64_t frames;           ///< n * nz * nt
  int64_t sequences;        ///< n * nz
  int64_t spatio_temporal;  ///< n * (nx' + ny') * nz
};
DatasetCounts dataset_counts(int64_t n, int64_t nz, int64_t nx_cropped, int64_t ny_cropped,
                             int64_t nt);

struct AugmentOps {
  bool flip_h = false;  ///< reverse columns
  bool flip_v = false;  ///< reverse rows
  int t_shift = 0;      ///< cyclic shift along the temporal axis
  double offset = 0.0;  ///< constant added to the input (and to ground-truth labels)
};

/// Applies the ops to input and label consistently. Residual labels are
/// left untouched by the constant offset (the implied x shifts with x_I).
SliceSample augment(const SliceSample& sample, const AugmentOps& ops, LabelMode label_mode);

AugmentOps random_augment_ops(int nt, double max_offset, Rng& rng);

/// Strided window offsets covering [0, extent); the final window is pinned
/// to the end when the stride does not land there exactly.
std::vector<int> window_offsets(int extent, int window, int stride);

/// Samples for whole-volume prediction: every slice position, windows at
/// the given stride. window_x/window_y are the trained sample extents.
std::vector<SliceSample> extract_for_prediction(const RealVolume& x_i, DomainMode mode,
                                                int window_x, int window_y, int stride,
                                                int subject = 0, int slice_z = 0);

struct Reassembled {
  RealVolume volume;
  Volume<int> coverage;
};

/// Each voxel becomes the arithmetic mean of all predictions covering it;
/// throws if any voxel of the target is uncovered.
Reassembled reassemble(const std::vector<std::pair<SliceOrigin, Patch>>& predictions, int nx,
                       int ny, int nt);

void save_dataset(const std::filesystem::path& dir, const std::vector<SliceSample>& samples);
std::vector<SliceSample> load_dataset(const std::filesystem::path& dir);

}  // namespace stcine::slicing
