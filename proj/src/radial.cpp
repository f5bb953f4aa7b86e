#include "stcine/radial.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stcine/io.hpp"

namespace stcine::radial {

namespace {

// Kaiser-Bessel gridding kernel, width 4 grid cells on a 2x oversampled
// grid, beta from Beatty et al. (minimal-oversampling formula).
constexpr double kKernelWidth = 4.0;
constexpr double kOversampling = 2.0;

double kb_beta() {
  double w = kKernelWidth, os = kOversampling;
  return M_PI * std::sqrt((w / os) * (w / os) * (os - 0.5) * (os - 0.5) - 0.8);
}

/// Kernel value at distance s (in oversampled grid cells), |s| <= W/2.
double kb_kernel(double s) {
  double t = 1.0 - (2.0 * s / kKernelWidth) * (2.0 * s / kKernelWidth);
  if (t < 0.0) return 0.0;
  static const double beta = kb_beta();
  static const double norm = std::cyl_bessel_i(0.0, beta);
  return std::cyl_bessel_i(0.0, beta * std::sqrt(t)) / norm;
}

/// Image-domain transform of the interpolation kernel, evaluated at FOV
/// coordinate r; dividing by it undoes the gridding roll-off.
double kb_image_response(double r) {
  static const double beta = kb_beta();
  static const double norm = std::cyl_bessel_i(0.0, beta);
  double dkg = 1.0 / kOversampling;
  double arg = M_PI * kKernelWidth * dkg * r;
  double t = beta * beta - arg * arg;
  double s;
  if (t > 0.0) {
    double rt = std::sqrt(t);
    s = std::sinh(rt) / rt;
  } else if (t < 0.0) {
    double rt = std::sqrt(-t);
    s = std::sin(rt) / rt;
  } else {
    s = 1.0;
  }
  return kKernelWidth * s / norm;
}

struct Taps {
  int idx[5];
  double w[5];
  int n = 0;
};

/// Interpolation taps for a k-space coordinate along one grid axis;
/// indices wrap (the oversampled grid is periodic).
Taps taps_1d(double k, double dk_grid, int grid_size) {
  Taps t;
  double u = k / dk_grid + grid_size / 2;
  int lo = static_cast<int>(std::ceil(u - kKernelWidth / 2.0));
  int hi = static_cast<int>(std::floor(u + kKernelWidth / 2.0));
  for (int g = lo; g <= hi; ++g) {
    double w = kb_kernel(u - g);
    if (w == 0.0) continue;
    int gi = ((g % grid_size) + grid_size) % grid_size;
    t.idx[t.n] = gi;
    t.w[t.n] = w;
    ++t.n;
  }
  return t;
}

/// Swap half-spaces along both axes; for even extents this is both fftshift
/// and ifftshift, so centred DFT = shift2 o FFT o shift2.
void shift2(std::vector<cplx>& buf, int gx, int gy) {
  int hx = gx / 2, hy = gy / 2;
  for (int y = 0; y < hy; ++y)
    for (int x = 0; x < gx; ++x) {
      int x2 = (x + hx) % gx;
      std::swap(buf[static_cast<size_t>(y) * gx + x], buf[static_cast<size_t>(y + hy) * gx + x2]);
    }
}

/// Shared per-geometry machinery for the NUFFT forward and its adjoint.
class GriddingPlan {
 public:
  GriddingPlan(int nx, int ny, double k_max)
      : nx_(nx), ny_(ny), gx_(2 * nx), gy_(2 * ny), dk_grid_(1.0 / kOversampling) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("gridding: grid too small");
    double k_extent = std::abs(k_max) + kKernelWidth / 2.0 * dk_grid_;
    if (k_extent > nx / 2.0 + 1.0 || k_extent > ny / 2.0 + 1.0)
      throw std::invalid_argument("gridding: k_max exceeds the representable band");
    work_.resize(static_cast<size_t>(gx_) * gy_);
    auto* p = reinterpret_cast<fftw_complex*>(work_.data());
    fwd_ = fftw_plan_dft_2d(gy_, gx_, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(gy_, gx_, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    deapod_x_ = deapod_axis(nx);
    deapod_y_ = deapod_axis(ny);
  }

  ~GriddingPlan() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  GriddingPlan(const GriddingPlan&) = delete;
  GriddingPlan& operator=(const GriddingPlan&) = delete;

  /// y_m = sum_i img_i exp(-i2pi k_m . r_i) * pixel_area, approximated by
  /// deapodised zero-padded FFT plus kernel interpolation.
  void forward(const cplx* img, const std::vector<std::pair<double, double>>& pts, cplx* out) {
    std::fill(work_.begin(), work_.end(), cplx(0.0));
    double scale = 1.0 / (static_cast<double>(nx_) * ny_);
    int offx = nx_ / 2, offy = ny_ / 2;
    for (int y = 0; y < ny_; ++y)
      for (int x = 0; x < nx_; ++x)
        work_[static_cast<size_t>(y + offy) * gx_ + (x + offx)] =
            img[static_cast<size_t>(y) * nx_ + x] * (scale / (deapod_x_[x] * deapod_y_[y]));
    shift2(work_, gx_, gy_);
    fftw_execute(fwd_);
    shift2(work_, gx_, gy_);
    for (size_t m = 0; m < pts.size(); ++m) {
      Taps tx = taps_1d(pts[m].first, dk_grid_, gx_);
      Taps ty = taps_1d(pts[m].second, dk_grid_, gy_);
      cplx acc(0.0);
      for (int a = 0; a < ty.n; ++a) {
        const cplx* row = work_.data() + static_cast<size_t>(ty.idx[a]) * gx_;
        cplx racc(0.0);
        for (int b = 0; b < tx.n; ++b) racc += tx.w[b] * row[tx.idx[b]];
        acc += ty.w[a] * racc;
      }
      out[m] = acc;
    }
  }

  /// Exact transpose of forward().
  void adjoint(const cplx* samples, const std::vector<std::pair<double, double>>& pts, cplx* img) {
    std::fill(work_.begin(), work_.end(), cplx(0.0));
    for (size_t m = 0; m < pts.size(); ++m) {
      Taps tx = taps_1d(pts[m].first, dk_grid_, gx_);
      Taps ty = taps_1d(pts[m].second, dk_grid_, gy_);
      for (int a = 0; a < ty.n; ++a) {
        cplx* row = work_.data() + static_cast<size_t>(ty.idx[a]) * gx_;
        cplx s = samples[m] * ty.w[a];
        for (int b = 0; b < tx.n; ++b) row[tx.idx[b]] += s * tx.w[b];
      }
    }
    shift2(work_, gx_, gy_);
    fftw_execute(bwd_);
    shift2(work_, gx_, gy_);
    double scale = 1.0 / (static_cast<double>(nx_) * ny_);
    int offx = nx_ / 2, offy = ny_ / 2;
    for (int y = 0; y < ny_; ++y)
      for (int x = 0; x < nx_; ++x)
        img[static_cast<size_t>(y) * nx_ + x] =
            work_[static_cast<size_t>(y + offy) * gx_ + (x + offx)] *
            (scale / (deapod_x_[x] * deapod_y_[y]));
  }

 private:
  std::vector<double> deapod_axis(int n) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = kb_image_response(static_cast<double>(i - n / 2) / n);
    return d;
  }

  int nx_, ny_, gx_, gy_;
  double dk_grid_;
  std::vector<cplx> work_;
  std::vector<double> deapod_x_, deapod_y_;
  fftw_plan fwd_, bwd_;
};

std::vector<std::pair<double, double>> phase_points(const Trajectory& traj,
                                                    const std::vector<int>& spokes) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(spokes.size() * traj.samples_per_spoke);
  for (int j : spokes)
    for (int s = 0; s < traj.samples_per_spoke; ++s) pts.push_back(traj.point(j, s));
  return pts;
}

void check_consistent(const KSpaceData& k) {
  if (k.values.rows != k.traj.n_spokes() || k.values.cols != k.traj.samples_per_spoke)
    throw std::invalid_argument("kspace: value shape inconsistent with trajectory");
}

}  // namespace

std::vector<int> Trajectory::spokes_of_phase(int t) const {
  std::vector<int> out;
  for (int j = 0; j < n_spokes(); ++j)
    if (phase_of[j] == t) out.push_back(j);
  return out;
}

Trajectory golden_angle_trajectory(int n_spokes, int samples_per_spoke, int n_phases,
                                   double k_max) {
  if (n_phases < 1) throw std::invalid_argument("trajectory: n_phases must be >= 1");
  if (n_spokes < n_phases)
    throw std::invalid_argument("trajectory: need at least one spoke per phase");
  if (samples_per_spoke < 2) throw std::invalid_argument("trajectory: too few samples per spoke");
  if (!(k_max > 0.0)) throw std::invalid_argument("trajectory: k_max must be positive");
  Trajectory traj;
  traj.samples_per_spoke = samples_per_spoke;
  traj.n_phases = n_phases;
  traj.k_max = k_max;
  traj.spoke_angles.resize(n_spokes);
  traj.phase_of.resize(n_spokes);
  for (int j = 0; j < n_spokes; ++j) {
    traj.spoke_angles[j] = std::fmod(j * kGoldenAngle, M_PI);
    traj.phase_of[j] = j % n_phases;
  }
  return traj;
}

Trajectory rotate_trajectory(const Trajectory& traj, double theta) {
  Trajectory out = traj;
  for (auto& a : out.spoke_angles) a += theta;
  return out;
}

KSpaceData sample_kspace_analytic(const phantom::PhantomSpec& spec, const Trajectory& traj,
                                  double rotation) {
  if (traj.n_phases > spec.n_phases)
    throw std::invalid_argument("sample: trajectory has more phases than the phantom");
  KSpaceData k;
  k.traj = traj;
  k.values = Mat<cplx>(traj.n_spokes(), traj.samples_per_spoke);
  for (int t = 0; t < traj.n_phases; ++t) {
    auto spokes = traj.spokes_of_phase(t);
    auto pts = phase_points(traj, spokes);
    auto vals = phantom::analytic_kspace(spec, t, rotation, pts);
    size_t m = 0;
    for (int j : spokes)
      for (int s = 0; s < traj.samples_per_spoke; ++s) k.values(j, s) = vals[m++];
  }
  return k;
}

KSpaceData sample_kspace_nufft(const ComplexVolume& images, const Trajectory& traj) {
  if (images.nt != traj.n_phases)
    throw std::invalid_argument("nufft: image sequence and trajectory phase counts differ");
  for (const auto& v : images.v)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("nufft: non-finite image value");
  KSpaceData k;
  k.traj = traj;
  k.values = Mat<cplx>(traj.n_spokes(), traj.samples_per_spoke);
  GriddingPlan plan(images.nx, images.ny, traj.k_max);
  std::vector<cplx> frame(static_cast<size_t>(images.nx) * images.ny);
  std::vector<cplx> out;
  for (int t = 0; t < traj.n_phases; ++t) {
    auto spokes = traj.spokes_of_phase(t);
    if (spokes.empty()) continue;
    auto pts = phase_points(traj, spokes);
    for (int y = 0; y < images.ny; ++y)
      for (int x = 0; x < images.nx; ++x)
        frame[static_cast<size_t>(y) * images.nx + x] = images(x, y, t);
    out.resize(pts.size());
    plan.forward(frame.data(), pts, out.data());
    size_t m = 0;
    for (int j : spokes)
      for (int s = 0; s < traj.samples_per_spoke; ++s) k.values(j, s) = out[m++];
  }
  return k;
}

KSpaceData sample_kspace_nufft(const RealVolume& images, const Trajectory& traj) {
  ComplexVolume c(images.nx, images.ny, images.nt);
  for (size_t i = 0; i < images.size(); ++i) c.v[i] = cplx(images.v[i], 0.0);
  return sample_kspace_nufft(c, traj);
}

ComplexVolume gridding_adjoint(const KSpaceData& k, int nx, int ny) {
  check_consistent(k);
  const Trajectory& traj = k.traj;
  ComplexVolume img(nx, ny, traj.n_phases);
  GriddingPlan plan(nx, ny, traj.k_max);
  std::vector<cplx> frame(static_cast<size_t>(nx) * ny);
  std::vector<cplx> samples;
  for (int t = 0; t < traj.n_phases; ++t) {
    auto spokes = traj.spokes_of_phase(t);
    if (spokes.empty()) continue;
    auto pts = phase_points(traj, spokes);
    samples.clear();
    for (int j : spokes)
      for (int s = 0; s < traj.samples_per_spoke; ++s) samples.push_back(k.values(j, s));
    plan.adjoint(samples.data(), pts, frame.data());
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) img(x, y, t) = frame[static_cast<size_t>(y) * nx + x];
  }
  return img;
}

ComplexVolume gridding_reconstruct(const KSpaceData& k, int nx, int ny) {
  check_consistent(k);
  const Trajectory& traj = k.traj;
  ComplexVolume img(nx, ny, traj.n_phases);
  GriddingPlan plan(nx, ny, traj.k_max);
  std::vector<cplx> frame(static_cast<size_t>(nx) * ny);
  std::vector<cplx> samples;
  double dkr = traj.radius_step();
  for (int t = 0; t < traj.n_phases; ++t) {
    auto spokes = traj.spokes_of_phase(t);
    if (spokes.empty()) throw std::invalid_argument("gridding: phase without spokes");
    auto pts = phase_points(traj, spokes);
    // radial quadrature: ramp |k| * dk * (pi / spokes); together with the
    // adjoint's pixel-area factor this approximates the inverse Fourier
    // integral, so a fully sampled object comes back at unit intensity.
    // Every spoke carries its own DC sample, so the central cell's area
    // (a disk of radius dk/2) is shared across them: weight dk/4 each.
    double quad = dkr * M_PI / static_cast<double>(spokes.size());
    double area = static_cast<double>(nx) * ny;
    samples.clear();
    for (int j : spokes)
      for (int s = 0; s < traj.samples_per_spoke; ++s) {
        double r = std::abs(traj.radius(s));
        double w = (r == 0.0 ? dkr / 4.0 : r) * quad * area;
        samples.push_back(k.values(j, s) * w);
      }
    plan.adjoint(samples.data(), pts, frame.data());
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) img(x, y, t) = frame[static_cast<size_t>(y) * nx + x];
  }
  return img;
}

// --- serialization ---

namespace {
constexpr char kKMagic[4] = {'S', 'T', 'C', 'K'};
constexpr uint32_t kKVersion = 1;

void wr_u32(std::ofstream& o, uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void wr_f64(std::ofstream& o, double v) { o.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t rd_u32(std::ifstream& i) {
  uint32_t v;
  i.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
double rd_f64(std::ifstream& i) {
  double v;
  i.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
}  // namespace

void save_kspace(const std::filesystem::path& path, const KSpaceData& k) {
  check_consistent(k);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("kspace: cannot write " + path.string());
  out.write(kKMagic, 4);
  wr_u32(out, kKVersion);
  wr_u32(out, static_cast<uint32_t>(k.traj.n_spokes()));
  wr_u32(out, static_cast<uint32_t>(k.traj.samples_per_spoke));
  wr_u32(out, static_cast<uint32_t>(k.traj.n_phases));
  wr_f64(out, k.traj.k_max);
  for (double a : k.traj.spoke_angles) wr_f64(out, a);
  for (int p : k.traj.phase_of) wr_u32(out, static_cast<uint32_t>(p));
  out.write(reinterpret_cast<const char*>(k.values.v.data()),
            static_cast<std::streamsize>(k.values.size() * 16));
  if (!out) throw std::runtime_error("kspace: short write to " + path.string());
}

KSpaceData load_kspace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("kspace: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kKMagic, 4) != 0)
    throw std::runtime_error("kspace: bad magic in " + path.string());
  if (rd_u32(in) != kKVersion) throw std::runtime_error("kspace: unsupported version");
  KSpaceData k;
  uint32_t n_spokes = rd_u32(in);
  k.traj.samples_per_spoke = static_cast<int>(rd_u32(in));
  k.traj.n_phases = static_cast<int>(rd_u32(in));
  k.traj.k_max = rd_f64(in);
  k.traj.spoke_angles.resize(n_spokes);
  for (auto& a : k.traj.spoke_angles) a = rd_f64(in);
  k.traj.phase_of.resize(n_spokes);
  for (auto& p : k.traj.phase_of) p = static_cast<int>(rd_u32(in));
  k.values = Mat<cplx>(static_cast<int>(n_spokes), k.traj.samples_per_spoke);
  in.read(reinterpret_cast<char*>(k.values.v.data()),
          static_cast<std::streamsize>(k.values.size() * 16));
  if (!in) throw std::runtime_error("kspace: truncated data in " + path.string());
  return k;
}

void kspace_to_csv(const std::filesystem::path& path, const KSpaceData& k) {
  io::CsvWriter csv(path);
  for (const auto* h : {"spoke", "sample", "phase", "kx", "ky", "re", "im"}) csv.cell(std::string(h));
  csv.end_row();
  for (int j = 0; j < k.traj.n_spokes(); ++j)
    for (int s = 0; s < k.traj.samples_per_spoke; ++s) {
      auto [kx, ky] = k.traj.point(j, s);
      csv.cell(static_cast<int64_t>(j));
      csv.cell(static_cast<int64_t>(s));
      csv.cell(static_cast<int64_t>(k.traj.phase_of[j]));
      csv.cell(kx);
      csv.cell(ky);
      csv.cell(k.values(j, s).real());
      csv.cell(k.values(j, s).imag());
      csv.end_row();
    }
}

void trajectory_to_csv(const std::filesystem::path& path, const Trajectory& traj) {
  io::CsvWriter csv(path);
  for (const auto* h : {"spoke", "angle", "phase"}) csv.cell(std::string(h));
  csv.end_row();
  for (int j = 0; j < traj.n_spokes(); ++j) {
    csv.cell(static_cast<int64_t>(j));
    csv.cell(traj.spoke_angles[j]);
    csv.cell(static_cast<int64_t>(traj.phase_of[j]));
    csv.end_row();
  }
}

}  // namespace stcine::radial
