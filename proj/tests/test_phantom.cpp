#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "stcine/phantom.hpp"

using namespace stcine;
using phantom::DynamicEllipse;
using phantom::Ellipse;
using phantom::PhantomSpec;

namespace {

PhantomSpec single_disk(double radius, double intensity, int n_phases = 1) {
  PhantomSpec spec;
  spec.n_phases = n_phases;
  spec.background.push_back({0.0, 0.0, radius, radius, 0.0, intensity});
  return spec;
}

/// Quadrature oracle for the disk transform: F(k) evaluated by Simpson
/// integration after the substitution x = a sin(theta), independent of any
/// Bessel identity.
cplx disk_ft_quadrature(double a, double kx) {
  const int n = 20000;  // even
  auto f = [&](double th) {
    double x = a * std::sin(th);
    double width = 2.0 * a * std::cos(th);
    double phase = -2.0 * M_PI * kx * x;
    return cplx(std::cos(phase), std::sin(phase)) * width * a * std::cos(th);
  };
  double lo = -M_PI / 2, hi = M_PI / 2, h = (hi - lo) / n;
  cplx acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

}  // namespace

TEST_CASE("empty spec renders an all-zero image") {
  PhantomSpec spec;
  spec.n_phases = 2;
  auto img = phantom::render_frame(spec, 0, 16, 16);
  for (double v : img.v) CHECK(v == 0.0);
}

TEST_CASE("a centred disk is rotation invariant") {
  auto spec = single_disk(0.3, 1.0);
  auto a = phantom::render_frame(spec, 0, 32, 32, 0.0);
  auto b = phantom::render_frame(spec, 0, 32, 32, M_PI);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("pulsated ellipse interior pixel count tracks the analytic area") {
  PhantomSpec spec;
  spec.n_phases = 8;
  DynamicEllipse d;
  d.shape = {0.05, -0.03, 0.22, 0.31, 0.4, 1.0};
  d.pulsation = 0.1;
  spec.dynamic.push_back(d);
  int t = spec.n_phases / 4;
  double scale = phantom::pulsation_scale(d, t, spec.n_phases);
  CHECK(scale == doctest::Approx(1.1));  // sin hits the crest at Nt/4

  auto img = phantom::render_frame(spec, t, 256, 256);
  double count = 0;
  for (double v : img.v) count += v > 0.0 ? 1.0 : 0.0;
  double pixel_area = 1.0 / (256.0 * 256.0);
  double area = M_PI * (d.shape.a * scale) * (d.shape.b * scale);
  CHECK(count * pixel_area == doctest::Approx(area).epsilon(0.02));
}

TEST_CASE("render_frame validates its inputs") {
  auto spec = single_disk(0.3, 1.0, 4);
  CHECK_THROWS_AS(phantom::render_frame(spec, 4, 32, 32), std::out_of_range);
  CHECK_THROWS_AS(phantom::render_frame(spec, -1, 32, 32), std::out_of_range);
  CHECK_THROWS_AS(phantom::render_frame(spec, 0, 4, 32), std::invalid_argument);

  PhantomSpec bad = spec;
  bad.dynamic.push_back({{0, 0, 0.1, 0.1, 0, 1.0}, 1.2, 0.0});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("render_sequence stacks frames deterministically") {
  SUBCASE("single phase equals the frame") {
    auto spec = single_disk(0.25, 2.0, 1);
    auto seq = phantom::render_sequence(spec, 16, 16);
    auto frm = phantom::render_frame(spec, 0, 16, 16);
    CHECK(seq.nt == 1);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) CHECK(seq(x, y, 0) == frm(x, y, 0));
  }
  SUBCASE("no pulsation means identical frames") {
    PhantomSpec spec = single_disk(0.25, 1.0, 5);
    spec.dynamic.push_back({{0.1, 0.0, 0.05, 0.08, 0.3, 0.5}, 0.0, 0.0});
    auto seq = phantom::render_sequence(spec, 24, 24);
    for (int t = 1; t < 5; ++t)
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) CHECK(seq(x, y, t) == seq(x, y, 0));
  }
  SUBCASE("pulsation follows the closed form, periodic beyond range") {
    DynamicEllipse d;
    d.shape = {0, 0, 0.1, 0.1, 0, 1};
    d.pulsation = 0.2;
    int nt = 12;
    for (int t = 0; t < nt; ++t) {
      double expect = 1.0 + 0.2 * std::sin(2.0 * M_PI * t / nt);
      CHECK(phantom::pulsation_scale(d, t, nt) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(phantom::pulsation_scale(d, t + nt, nt) ==
            doctest::Approx(phantom::pulsation_scale(d, t, nt)).epsilon(1e-9));
    }
  }
}

TEST_CASE("analytic k-space DC value is the weighted area") {
  PhantomSpec spec;
  spec.n_phases = 1;
  spec.background.push_back({0.1, -0.2, 0.2, 0.1, 0.7, 3.0});
  auto vals = phantom::analytic_kspace(spec, 0, 0.0, {{0.0, 0.0}});
  CHECK(vals[0].real() == doctest::Approx(3.0 * M_PI * 0.2 * 0.1).epsilon(1e-12));
  CHECK(vals[0].imag() == doctest::Approx(0.0));
}

TEST_CASE("shifting an ellipse changes only the phase") {
  PhantomSpec centred, shifted;
  centred.n_phases = shifted.n_phases = 1;
  centred.background.push_back({0.0, 0.0, 0.15, 0.25, 0.3, 1.0});
  shifted.background.push_back({0.1, -0.12, 0.15, 0.25, 0.3, 1.0});
  std::vector<std::pair<double, double>> pts = {{0.5, 0.0}, {3.0, -2.0}, {10.0, 7.5}};
  auto a = phantom::analytic_kspace(centred, 0, 0.0, pts);
  auto b = phantom::analytic_kspace(shifted, 0, 0.0, pts);
  for (size_t i = 0; i < pts.size(); ++i)
    CHECK(std::abs(a[i]) == doctest::Approx(std::abs(b[i])).epsilon(1e-12));
}

TEST_CASE("disk transform matches the quadrature oracle") {
  auto spec = single_disk(0.4, 1.0);
  auto vals = phantom::analytic_kspace(spec, 0, 0.0, {{0.5, 0.0}, {2.0, 0.0}, {7.25, 0.0}});
  for (size_t i = 0; i < vals.size(); ++i) {
    double kx = std::vector<double>{0.5, 2.0, 7.25}[i];
    cplx oracle = disk_ft_quadrature(0.4, kx);
    CHECK(std::abs(vals[i] - oracle) < 1e-6);
  }
}

TEST_CASE("analytic k-space is linear in the spec") {
  PhantomSpec one, two, both;
  one.n_phases = two.n_phases = both.n_phases = 1;
  Ellipse e1{0.1, 0.0, 0.2, 0.1, 0.2, 1.5};
  Ellipse e2{-0.1, 0.1, 0.15, 0.2, 1.1, -0.5};
  one.background.push_back(e1);
  two.background.push_back(e2);
  both.background = {e1, e2};
  std::vector<std::pair<double, double>> pts = {{0.0, 0.0}, {1.5, -3.2}, {8.0, 2.0}};
  auto a = phantom::analytic_kspace(one, 0, 0.0, pts);
  auto b = phantom::analytic_kspace(two, 0, 0.0, pts);
  auto c = phantom::analytic_kspace(both, 0, 0.0, pts);
  for (size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(c[i] - (a[i] + b[i])) == 0.0);
}

TEST_CASE("rotating the scene equals counter-rotating k") {
  PhantomSpec spec;
  spec.n_phases = 1;
  spec.background.push_back({0.12, -0.08, 0.2, 0.1, 0.35, 2.0});
  double theta = 0.7;
  std::vector<std::pair<double, double>> pts = {{1.0, 2.0}, {-3.5, 0.25}};
  std::vector<std::pair<double, double>> rotated_back;
  for (auto [kx, ky] : pts)
    rotated_back.push_back({std::cos(theta) * kx + std::sin(theta) * ky,
                            -std::sin(theta) * kx + std::cos(theta) * ky});
  auto a = phantom::analytic_kspace(spec, 0, theta, pts);
  auto b = phantom::analytic_kspace(spec, 0, 0.0, rotated_back);
  for (size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("analytic k-space rejects non-finite points") {
  auto spec = single_disk(0.3, 1.0);
  CHECK_THROWS_AS(phantom::analytic_kspace(spec, 0, 0.0, {{std::nan(""), 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("phantom spec round-trips through the flat config") {
  auto spec = phantom::random_phantom(123, 16);
  auto cfg = phantom::to_config(spec);
  auto back = phantom::from_config(cfg);
  REQUIRE(back.background.size() == spec.background.size());
  REQUIRE(back.dynamic.size() == spec.dynamic.size());
  CHECK(back.n_phases == spec.n_phases);
  for (size_t i = 0; i < spec.background.size(); ++i) {
    CHECK(back.background[i].cx == spec.background[i].cx);
    CHECK(back.background[i].intensity == spec.background[i].intensity);
  }
  for (size_t i = 0; i < spec.dynamic.size(); ++i) {
    CHECK(back.dynamic[i].pulsation == spec.dynamic[i].pulsation);
    CHECK(back.dynamic[i].phase_offset == spec.dynamic[i].phase_offset);
  }
}

TEST_CASE("random phantoms are valid and deterministic") {
  auto a = phantom::random_phantom(42, 16);
  auto b = phantom::random_phantom(42, 16);
  CHECK(a.background.size() == b.background.size());
  auto fa = phantom::render_frame(a, 3, 32, 32);
  auto fb = phantom::render_frame(b, 3, 32, 32);
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa.v[i] == fb.v[i]);
  CHECK_NOTHROW(a.validate());
}
