#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "stcine/phantom.hpp"
#include "stcine/volume.hpp"

namespace stcine::radial {

/// Small golden angle, pi*(3 - sqrt(5)) ~ 111.246 deg.
inline constexpr double kGoldenAngle = 1.9416110387254666;

struct Trajectory {
  std::vector<double> spoke_angles;  ///< radians, length Ntheta
  std::vector<int> phase_of;         ///< spoke -> cardiac phase
  int samples_per_spoke = 0;
  int n_phases = 0;
  double k_max = 0.0;  ///< cycles per FOV unit

  int n_spokes() const { return static_cast<int>(spoke_angles.size()); }
  double radius_step() const { return 2.0 * k_max / samples_per_spoke; }
  /// Signed radius of sample s; s = samples_per_spoke/2 lands exactly on DC.
  double radius(int s) const { return (s - samples_per_spoke / 2) * radius_step(); }
  std::pair<double, double> point(int spoke, int s) const {
    double r = radius(s);
    return {r * std::cos(spoke_angles[spoke]), r * std::sin(spoke_angles[spoke])};
  }
  std::vector<int> spokes_of_phase(int t) const;
};

struct KSpaceData {
  Trajectory traj;
  Mat<cplx> values;  ///< [n_spokes x samples_per_spoke]
};

/// Spoke j at angle j*golden mod pi; spokes assigned to phases round-robin
/// in acquisition order.
Trajectory golden_angle_trajectory(int n_spokes, int samples_per_spoke, int n_phases, double k_max);

Trajectory rotate_trajectory(const Trajectory& traj, double theta);

/// Exact forward model: every spoke sampled from the phantom's analytic
/// Fourier transform at its assigned cardiac phase.
KSpaceData sample_kspace_analytic(const phantom::PhantomSpec& spec, const Trajectory& traj,
                                  double rotation = 0.0);

/// Gridding NUFFT forward model (deapodisation, 2x oversampled FFT,
/// Kaiser-Bessel width-4 interpolation with the Beatty beta).
KSpaceData sample_kspace_nufft(const ComplexVolume& images, const Trajectory& traj);
KSpaceData sample_kspace_nufft(const RealVolume& images, const Trajectory& traj);

/// Exact adjoint of sample_kspace_nufft (no density compensation).
ComplexVolume gridding_adjoint(const KSpaceData& k, int nx, int ny);

/// Density-compensated adjoint: ramp |k| weights (DC weighted as half the
/// first ramp step) scaled so a fully sampled phantom reconstructs at unit
/// intensity.
ComplexVolume gridding_reconstruct(const KSpaceData& k, int nx, int ny);

void save_kspace(const std::filesystem::path& path, const KSpaceData& k);
KSpaceData load_kspace(const std::filesystem::path& path);
void kspace_to_csv(const std::filesystem::path& path, const KSpaceData& k);
void trajectory_to_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace stcine::radial
