#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stcine {

using cplx = std::complex<double>;

/// Dense 2D array, row-major.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c, T fill = T{}) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative extent");
  }

  T& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// Image sequence of shape Nx x Ny x Nt. Storage is x-fastest, then y,
/// then t, so each frame is contiguous.
template <typename T>
struct Volume {
  int nx = 0;
  int ny = 0;
  int nt = 0;
  std::vector<T> v;

  Volume() = default;
  Volume(int nx_, int ny_, int nt_, T fill = T{})
      : nx(nx_), ny(ny_), nt(nt_), v(static_cast<size_t>(nx_) * ny_ * nt_, fill) {
    if (nx_ <= 0 || ny_ <= 0 || nt_ <= 0) throw std::invalid_argument("Volume: non-positive extent");
  }

  size_t idx(int x, int y, int t) const {
    return (static_cast<size_t>(t) * ny + y) * nx + x;
  }
  T& operator()(int x, int y, int t) { return v[idx(x, y, t)]; }
  const T& operator()(int x, int y, int t) const { return v[idx(x, y, t)]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Volume& o) const { return nx == o.nx && ny == o.ny && nt == o.nt; }

  /// Frame t as a Mat with rows = y, cols = x.
  Mat<T> frame(int t) const {
    check_t(t);
    Mat<T> m(ny, nx);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) m(y, x) = (*this)(x, y, t);
    return m;
  }

  void check_t(int t) const {
    if (t < 0 || t >= nt) throw std::out_of_range("Volume: frame index out of range");
  }
};

using RealVolume = Volume<double>;
using ComplexVolume = Volume<cplx>;

inline RealVolume magnitude(const ComplexVolume& v) {
  RealVolume out(v.nx, v.ny, v.nt);
  for (size_t i = 0; i < v.size(); ++i) out.v[i] = std::abs(v.v[i]);
  return out;
}

inline RealVolume magnitude(const RealVolume& v) {
  RealVolume out = v;
  for (auto& x : out.v) x = std::abs(x);
  return out;
}

}  // namespace stcine
