#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stcine::nn {

/// Dense (batch, channels, height, width) tensor, w fastest.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_) {
    if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1) throw std::invalid_argument("tensor: bad shape");
  }

  size_t idx(int b, int ch, int y, int x) const {
    return ((static_cast<size_t>(b) * c + ch) * h + y) * w + x;
  }
  T& at(int b, int ch, int y, int x) { return v[idx(b, ch, y, x)]; }
  const T& at(int b, int ch, int y, int x) const { return v[idx(b, ch, y, x)]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat: shapes incompatible");
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  size_t plane_a = static_cast<size_t>(a.c) * a.h * a.w;
  size_t plane_b = static_cast<size_t>(b.c) * b.h * b.w;
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.v.begin() + i * plane_a, a.v.begin() + (i + 1) * plane_a,
              out.v.begin() + i * (plane_a + plane_b));
    std::copy(b.v.begin() + i * plane_b, b.v.begin() + (i + 1) * plane_b,
              out.v.begin() + i * (plane_a + plane_b) + plane_a);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, int c_first) {
  if (c_first < 1 || c_first >= x.c) throw std::invalid_argument("split: bad channel count");
  Tensor<T> a(x.n, c_first, x.h, x.w);
  Tensor<T> b(x.n, x.c - c_first, x.h, x.w);
  size_t plane_a = static_cast<size_t>(a.c) * a.h * a.w;
  size_t plane_b = static_cast<size_t>(b.c) * b.h * b.w;
  for (int i = 0; i < x.n; ++i) {
    std::copy(x.v.begin() + i * (plane_a + plane_b),
              x.v.begin() + i * (plane_a + plane_b) + plane_a, a.v.begin() + i * plane_a);
    std::copy(x.v.begin() + i * (plane_a + plane_b) + plane_a,
              x.v.begin() + (i + 1) * (plane_a + plane_b), b.v.begin() + i * plane_b);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace stcine::nn
