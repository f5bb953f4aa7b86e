#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stcine/io.hpp"
#include "stcine/volume.hpp"

namespace stcine::phantom {

/// Axis-tilted ellipse in field-of-view units (FOV centred at the origin).
struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double a = 0.0;  ///< semi-axis along the tilted x' direction
  double b = 0.0;
  double tilt = 0.0;  ///< radians
  double intensity = 0.0;
};

struct DynamicEllipse {
  Ellipse shape;
  double pulsation = 0.0;    ///< alpha in [0, 1): semi-axes scale by 1 + alpha*sin(2*pi*t/Nt + phase)
  double phase_offset = 0.0;
};

struct PhantomSpec {
  std::vector<Ellipse> background;
  std::vector<DynamicEllipse> dynamic;
  double fov = 1.0;
  int n_phases = 1;

  void validate() const;
};

/// Semi-axis scale factor of a dynamic ellipse at cardiac phase t.
double pulsation_scale(const DynamicEllipse& e, int t, int n_phases);

/// Rasterises one cardiac phase on an Nx x Ny grid; a pixel takes the sum of
/// intensities of the ellipses covering its centre. The whole scene is
/// rotated by `rotation` about the FOV centre.
RealVolume render_frame(const PhantomSpec& spec, int t, int nx, int ny, double rotation = 0.0);

RealVolume render_sequence(const PhantomSpec& spec, int nx, int ny, double rotation = 0.0);

/// Exact continuous Fourier transform F(k) = integral x(r) exp(-i2pi k.r) dr
/// evaluated at arbitrary (kx, ky) in cycles per FOV unit.
std::vector<cplx> analytic_kspace(const PhantomSpec& spec, int t, double rotation,
                                  const std::vector<std::pair<double, double>>& points);

/// Randomised cardiac-like phantom: one body ellipse, a few static interior
/// ellipses and pulsating chambers. Deterministic given the seed.
PhantomSpec random_phantom(uint64_t seed, int n_phases);

io::Config to_config(const PhantomSpec& spec);
PhantomSpec from_config(const io::Config& cfg);

}  // namespace stcine::phantom
