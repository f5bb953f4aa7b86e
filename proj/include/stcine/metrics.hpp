#pragma once

#include "stcine/volume.hpp"

namespace stcine::metrics {

inline constexpr double kPsnrCap = 300.0;  ///< finite stand-in for identical inputs

/// 10*log10(peak^2 / MSE) with peak = max(ref); capped at 300 dB.
double psnr(const Mat<double>& ref, const Mat<double>& est);

/// Mean SSIM over all fully interior 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range = max(ref) - min(ref)).
double ssim(const Mat<double>& ref, const Mat<double>& est);

/// Same with an externally supplied dynamic range (volume evaluation uses
/// the cropped reference volume's range, since single spatio-temporal
/// slices of static tissue can be constant).
double ssim(const Mat<double>& ref, const Mat<double>& est, double dynamic_range);

/// ||est - ref||_2 / ||ref||_2.
double nrmse(const Mat<double>& ref, const Mat<double>& est);

struct Roi {
  int x0 = 0, y0 = 0;
  int w = 0, h = 0;
};

/// Central ROI covering half of each spatial extent.
Roi central_roi(int nx, int ny);

struct MetricReport {
  double psnr_frames = 0.0;
  double ssim_frames = 0.0;
  double nrmse_frames = 0.0;
  double psnr_st = 0.0;   ///< mean over xt and yt slices, pooled
  double ssim_st = 0.0;
  double nrmse_st = 0.0;
  Roi roi;
};

/// Crops both volumes to the ROI (full temporal extent), then averages each
/// metric over the Nt frames and over all xt/yt slices.
MetricReport evaluate_volume(const RealVolume& ref, const RealVolume& est, const Roi& roi);

}  // namespace stcine::metrics
