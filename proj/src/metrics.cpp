#include "stcine/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stcine/slicing.hpp"

namespace stcine::metrics {

namespace {

void check_shapes(const Mat<double>& ref, const Mat<double>& est) {
  if (!ref.same_shape(est)) throw std::invalid_argument("metrics: shape mismatch");
  if (ref.size() == 0) throw std::invalid_argument("metrics: empty input");
}

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

const std::vector<double>& gaussian_window() {
  static const std::vector<double> w = [] {
    std::vector<double> g(kWin * kWin);
    double sum = 0.0;
    for (int r = 0; r < kWin; ++r)
      for (int c = 0; c < kWin; ++c) {
        double dy = r - kWin / 2, dx = c - kWin / 2;
        double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        g[r * kWin + c] = v;
        sum += v;
      }
    for (auto& v : g) v /= sum;
    return g;
  }();
  return w;
}

}  // namespace

double psnr(const Mat<double>& ref, const Mat<double>& est) {
  check_shapes(ref, est);
  double peak = *std::max_element(ref.v.begin(), ref.v.end());
  if (peak <= 0.0) throw std::invalid_argument("psnr: reference has no positive peak");
  double mse = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    double d = est.v[i] - ref.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Mat<double>& ref, const Mat<double>& est) {
  check_shapes(ref, est);
  double lo = *std::min_element(ref.v.begin(), ref.v.end());
  double hi = *std::max_element(ref.v.begin(), ref.v.end());
  double range = hi - lo;
  if (range <= 0.0) throw std::invalid_argument("ssim: constant reference");
  return ssim(ref, est, range);
}

double ssim(const Mat<double>& ref, const Mat<double>& est, double range) {
  check_shapes(ref, est);
  if (ref.rows < kWin || ref.cols < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  if (range <= 0.0) throw std::invalid_argument("ssim: dynamic range must be positive");
  double c1 = (kK1 * range) * (kK1 * range);
  double c2 = (kK2 * range) * (kK2 * range);
  const auto& w = gaussian_window();

  double acc = 0.0;
  int count = 0;
  for (int r0 = 0; r0 + kWin <= ref.rows; ++r0)
    for (int c0 = 0; c0 + kWin <= ref.cols; ++c0) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
          double g = w[r * kWin + c];
          double a = ref(r0 + r, c0 + c);
          double b = est(r0 + r, c0 + c);
          mx += g * a;
          my += g * b;
          mxx += g * a * a;
          myy += g * b * b;
          mxy += g * a * b;
        }
      double vx = mxx - mx * mx;
      double vy = myy - my * my;
      double cov = mxy - mx * my;
      double s = ((2 * mx * my + c1) * (2 * cov + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      acc += s;
      ++count;
    }
  return acc / count;
}

double nrmse(const Mat<double>& ref, const Mat<double>& est) {
  check_shapes(ref, est);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    double d = est.v[i] - ref.v[i];
    num += d * d;
    den += ref.v[i] * ref.v[i];
  }
  if (den == 0.0) throw std::invalid_argument("nrmse: zero-norm reference");
  return std::sqrt(num / den);
}

Roi central_roi(int nx, int ny) {
  return {nx / 4, ny / 4, nx / 2, ny / 2};
}

namespace {

RealVolume crop_roi(const RealVolume& v, const Roi& roi) {
  if (roi.x0 < 0 || roi.y0 < 0 || roi.w < 1 || roi.h < 1 || roi.x0 + roi.w > v.nx ||
      roi.y0 + roi.h > v.ny)
    throw std::invalid_argument("evaluate_volume: roi out of bounds");
  RealVolume out(roi.w, roi.h, v.nt);
  for (int t = 0; t < v.nt; ++t)
    for (int y = 0; y < roi.h; ++y)
      for (int x = 0; x < roi.w; ++x) out(x, y, t) = v(roi.x0 + x, roi.y0 + y, t);
  return out;
}

}  // namespace

MetricReport evaluate_volume(const RealVolume& ref, const RealVolume& est, const Roi& roi) {
  if (!ref.same_shape(est)) throw std::invalid_argument("evaluate_volume: shape mismatch");
  RealVolume r = crop_roi(ref, roi);
  RealVolume e = crop_roi(est, roi);
  double lo = *std::min_element(r.v.begin(), r.v.end());
  double hi = *std::max_element(r.v.begin(), r.v.end());
  double range = hi - lo;  // shared SSIM range: single slices can be constant

  MetricReport rep;
  rep.roi = roi;
  for (int t = 0; t < r.nt; ++t) {
    Mat<double> fr = r.frame(t), fe = e.frame(t);
    rep.psnr_frames += psnr(fr, fe);
    rep.ssim_frames += ssim(fr, fe, range);
    rep.nrmse_frames += nrmse(fr, fe);
  }
  rep.psnr_frames /= r.nt;
  rep.ssim_frames /= r.nt;
  rep.nrmse_frames /= r.nt;

  int n_slices = 0;
  auto accumulate = [&](const Mat<double>& sr, const Mat<double>& se) {
    rep.psnr_st += psnr(sr, se);
    rep.ssim_st += ssim(sr, se, range);
    rep.nrmse_st += nrmse(sr, se);
    ++n_slices;
  };
  for (int y = 0; y < r.ny; ++y) accumulate(slicing::extract_xt(r, y), slicing::extract_xt(e, y));
  for (int x = 0; x < r.nx; ++x) accumulate(slicing::extract_yt(r, x), slicing::extract_yt(e, x));
  rep.psnr_st /= n_slices;
  rep.ssim_st /= n_slices;
  rep.nrmse_st /= n_slices;
  return rep;
}

}  // namespace stcine::metrics
