#include "stcine/phantom.hpp"

#include <cmath>
#include <stdexcept>

#include "stcine/rng.hpp"

namespace stcine::phantom {

namespace {

void validate_ellipse(const Ellipse& e, double fov, double headroom) {
  if (e.a <= 0.0 || e.b <= 0.0) throw std::invalid_argument("ellipse: semi-axes must be positive");
  if (std::abs(e.cx) + e.a * headroom > fov / 2.0 || std::abs(e.cy) + e.b * headroom > fov / 2.0)
    throw std::invalid_argument("ellipse: leaves the field of view");
}

/// jinc(q) = J1(2*pi*q)/q, continuous at 0 with value pi.
double jinc(double q) {
  if (q < 1e-12) return M_PI;
  return std::cyl_bessel_j(1.0, 2.0 * M_PI * q) / q;
}

struct PlacedEllipse {
  double cx, cy, a, b, tilt, intensity;
};

/// Ellipse geometry at phase t with the scene rotation applied.
PlacedEllipse place(const Ellipse& e, double scale, double rotation) {
  double cr = std::cos(rotation), sr = std::sin(rotation);
  PlacedEllipse p;
  p.cx = cr * e.cx - sr * e.cy;
  p.cy = sr * e.cx + cr * e.cy;
  p.a = e.a * scale;
  p.b = e.b * scale;
  p.tilt = e.tilt + rotation;
  p.intensity = e.intensity;
  if (p.a <= 0.0 || p.b <= 0.0) throw std::domain_error("phantom: pulsation drove a semi-axis <= 0");
  return p;
}

std::vector<PlacedEllipse> scene_at(const PhantomSpec& spec, int t, double rotation) {
  if (t < 0 || t >= spec.n_phases) throw std::out_of_range("phantom: phase index out of range");
  std::vector<PlacedEllipse> out;
  out.reserve(spec.background.size() + spec.dynamic.size());
  for (const auto& e : spec.background) out.push_back(place(e, 1.0, rotation));
  for (const auto& d : spec.dynamic)
    out.push_back(place(d.shape, pulsation_scale(d, t, spec.n_phases), rotation));
  return out;
}

}  // namespace

void PhantomSpec::validate() const {
  if (n_phases < 1) throw std::invalid_argument("phantom: n_phases must be >= 1");
  if (fov <= 0.0) throw std::invalid_argument("phantom: fov must be positive");
  for (const auto& e : background) validate_ellipse(e, fov, 1.0);
  for (const auto& d : dynamic) {
    if (d.pulsation < 0.0 || d.pulsation >= 1.0)
      throw std::invalid_argument("phantom: pulsation amplitude must be in [0, 1)");
    // containment must hold at full expansion, positivity at full contraction
    validate_ellipse(d.shape, fov, 1.0 + d.pulsation);
  }
}

double pulsation_scale(const DynamicEllipse& e, int t, int n_phases) {
  return 1.0 + e.pulsation * std::sin(2.0 * M_PI * t / n_phases + e.phase_offset);
}

RealVolume render_frame(const PhantomSpec& spec, int t, int nx, int ny, double rotation) {
  if (nx < 8 || ny < 8) throw std::invalid_argument("phantom: grid must be at least 8x8");
  auto scene = scene_at(spec, t, rotation);
  RealVolume img(nx, ny, 1);
  double dx = spec.fov / nx, dy = spec.fov / ny;
  for (const auto& e : scene) {
    double ct = std::cos(e.tilt), st = std::sin(e.tilt);
    for (int iy = 0; iy < ny; ++iy) {
      double py = (iy - ny / 2) * dy - e.cy;
      for (int ix = 0; ix < nx; ++ix) {
        double px = (ix - nx / 2) * dx - e.cx;
        double u = ct * px + st * py;   // rotate into the ellipse frame
        double v = -st * px + ct * py;
        double q = (u / e.a) * (u / e.a) + (v / e.b) * (v / e.b);
        if (q <= 1.0) img(ix, iy, 0) += e.intensity;
      }
    }
  }
  return img;
}

RealVolume render_sequence(const PhantomSpec& spec, int nx, int ny, double rotation) {
  RealVolume seq(nx, ny, spec.n_phases);
  for (int t = 0; t < spec.n_phases; ++t) {
    RealVolume f = render_frame(spec, t, nx, ny, rotation);
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) seq(ix, iy, t) = f(ix, iy, 0);
  }
  return seq;
}

std::vector<cplx> analytic_kspace(const PhantomSpec& spec, int t, double rotation,
                                  const std::vector<std::pair<double, double>>& points) {
  for (const auto& [kx, ky] : points)
    if (!std::isfinite(kx) || !std::isfinite(ky))
      throw std::invalid_argument("phantom: non-finite k-space point");
  auto scene = scene_at(spec, t, rotation);
  std::vector<cplx> out(points.size(), cplx(0.0, 0.0));
  for (const auto& e : scene) {
    double ct = std::cos(e.tilt), st = std::sin(e.tilt);
    for (size_t m = 0; m < points.size(); ++m) {
      auto [kx, ky] = points[m];
      // rotate k into the ellipse frame, stretch by the semi-axes
      double ku = ct * kx + st * ky;
      double kv = -st * kx + ct * ky;
      double q = std::hypot(e.a * ku, e.b * kv);
      double mag = e.intensity * e.a * e.b * jinc(q);
      double phase = -2.0 * M_PI * (kx * e.cx + ky * e.cy);
      out[m] += mag * cplx(std::cos(phase), std::sin(phase));
    }
  }
  return out;
}

PhantomSpec random_phantom(uint64_t seed, int n_phases) {
  // one canonical short-axis-like anatomy, jittered per subject: different
  // subjects look like different patients, not like unrelated scenes, and
  // the scene has a definite orientation
  Rng rng(seed);
  PhantomSpec spec;
  spec.fov = 1.0;
  spec.n_phases = n_phases;

  auto jitter = [&rng](double base, double amp) { return base + rng.uniform(-amp, amp); };

  Ellipse body;
  body.a = jitter(0.41, 0.015);
  body.b = jitter(0.35, 0.015);
  body.tilt = jitter(0.15, 0.08);
  body.intensity = jitter(0.18, 0.02);
  spec.background.push_back(body);

  Ellipse spine;
  spine.cx = jitter(-0.02, 0.02);
  spine.cy = jitter(-0.23, 0.02);
  spine.a = jitter(0.060, 0.008);
  spine.b = jitter(0.045, 0.006);
  spine.tilt = jitter(1.55, 0.1);
  spine.intensity = jitter(0.45, 0.05);
  spec.background.push_back(spine);

  Ellipse liver;
  liver.cx = jitter(0.17, 0.02);
  liver.cy = jitter(0.02, 0.02);
  liver.a = jitter(0.10, 0.01);
  liver.b = jitter(0.07, 0.01);
  liver.tilt = jitter(0.5, 0.12);
  liver.intensity = jitter(0.13, 0.03);
  spec.background.push_back(liver);

  Ellipse vessel;
  vessel.cx = jitter(-0.20, 0.02);
  vessel.cy = jitter(0.05, 0.02);
  vessel.a = jitter(0.035, 0.005);
  vessel.b = jitter(0.032, 0.004);
  vessel.tilt = jitter(0.0, 0.3);
  vessel.intensity = jitter(0.50, 0.06);
  spec.background.push_back(vessel);

  DynamicEllipse lv;
  lv.shape.cx = jitter(0.03, 0.02);
  lv.shape.cy = jitter(0.06, 0.02);
  lv.shape.a = jitter(0.105, 0.010);
  lv.shape.b = jitter(0.085, 0.008);
  lv.shape.tilt = jitter(0.9, 0.1);
  lv.shape.intensity = jitter(0.55, 0.06);
  lv.pulsation = jitter(0.16, 0.03);
  lv.phase_offset = jitter(0.0, 0.25);
  spec.dynamic.push_back(lv);

  DynamicEllipse rv;
  rv.shape.cx = jitter(-0.09, 0.02);
  rv.shape.cy = jitter(0.10, 0.02);
  rv.shape.a = jitter(0.075, 0.008);
  rv.shape.b = jitter(0.050, 0.006);
  rv.shape.tilt = jitter(1.3, 0.12);
  rv.shape.intensity = jitter(0.40, 0.05);
  rv.pulsation = jitter(0.12, 0.03);
  rv.phase_offset = jitter(0.2, 0.25);
  spec.dynamic.push_back(rv);

  spec.validate();
  return spec;
}

namespace {

void put_ellipse(io::Config& cfg, const std::string& prefix, const Ellipse& e) {
  cfg.set_double(prefix + ".cx", e.cx);
  cfg.set_double(prefix + ".cy", e.cy);
  cfg.set_double(prefix + ".a", e.a);
  cfg.set_double(prefix + ".b", e.b);
  cfg.set_double(prefix + ".tilt", e.tilt);
  cfg.set_double(prefix + ".intensity", e.intensity);
}

Ellipse get_ellipse(const io::Config& cfg, const std::string& prefix) {
  Ellipse e;
  e.cx = cfg.get_double(prefix + ".cx");
  e.cy = cfg.get_double(prefix + ".cy");
  e.a = cfg.get_double(prefix + ".a");
  e.b = cfg.get_double(prefix + ".b");
  e.tilt = cfg.get_double(prefix + ".tilt");
  e.intensity = cfg.get_double(prefix + ".intensity");
  return e;
}

}  // namespace

io::Config to_config(const PhantomSpec& spec) {
  io::Config cfg;
  cfg.set_double("fov", spec.fov);
  cfg.set_int("n_phases", spec.n_phases);
  for (size_t i = 0; i < spec.background.size(); ++i)
    put_ellipse(cfg, "background." + std::to_string(i), spec.background[i]);
  for (size_t i = 0; i < spec.dynamic.size(); ++i) {
    std::string p = "dynamic." + std::to_string(i);
    put_ellipse(cfg, p, spec.dynamic[i].shape);
    cfg.set_double(p + ".pulsation", spec.dynamic[i].pulsation);
    cfg.set_double(p + ".phase_offset", spec.dynamic[i].phase_offset);
  }
  return cfg;
}

PhantomSpec from_config(const io::Config& cfg) {
  PhantomSpec spec;
  spec.fov = cfg.get_double("fov", 1.0);
  spec.n_phases = static_cast<int>(cfg.get_int("n_phases", 1));
  int nb = cfg.group_count("background");
  for (int i = 0; i < nb; ++i) spec.background.push_back(get_ellipse(cfg, "background." + std::to_string(i)));
  int nd = cfg.group_count("dynamic");
  for (int i = 0; i < nd; ++i) {
    std::string p = "dynamic." + std::to_string(i);
    DynamicEllipse d;
    d.shape = get_ellipse(cfg, p);
    d.pulsation = cfg.get_double(p + ".pulsation");
    d.phase_offset = cfg.get_double(p + ".phase_offset", 0.0);
    spec.dynamic.push_back(d);
  }
  spec.validate();
  return spec;
}

}  // namespace stcine::phantom
