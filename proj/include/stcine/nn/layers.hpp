#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stcine/nn/tensor.hpp"
#include "stcine/rng.hpp"

namespace stcine::nn {

enum class Mode { Train, Eval };

/// Named view into a parameter tensor and its gradient buffer.
template <typename T>
struct ParamView {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;
};

/// Named view into non-trainable state (batch-norm running statistics).
template <typename T>
struct StateView {
  std::string name;
  std::vector<T>* value;
};

/// 2D cross-correlation with zero padding that preserves H x W.
/// Kernel size is 3 (pad 1) or 1 (pad 0).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize)
      : in_(in_ch), out_(out_ch), k_(ksize), pad_(ksize / 2) {
    if (ksize != 1 && ksize != 3) throw std::invalid_argument("conv: kernel must be 1 or 3");
    weight_.assign(static_cast<size_t>(out_) * in_ * k_ * k_, T(0));
    bias_.assign(out_, T(0));
    gweight_.assign(weight_.size(), T(0));
    gbias_.assign(bias_.size(), T(0));
  }

  /// Kaiming-style init: normal with std sqrt(2 / fan_in), zero bias.
  void init(Rng& rng) {
    T std_dev = std::sqrt(T(2) / static_cast<T>(in_ * k_ * k_));
    for (auto& w : weight_) w = static_cast<T>(rng.next_gaussian()) * std_dev;
    std::fill(bias_.begin(), bias_.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.c != in_) throw std::invalid_argument("conv: channel mismatch");
    input_ = x;
    Tensor<T> y(x.n, out_, x.h, x.w);
    MatrixR cols = im2col(x);
    Eigen::Map<const MatrixR> wmat(weight_.data(), out_, in_ * k_ * k_);
    MatrixC out = wmat * cols;  // out_ x (n*h*w)
    for (int b = 0; b < x.n; ++b)
      for (int co = 0; co < out_; ++co) {
        T bias = bias_[co];
        size_t m0 = static_cast<size_t>(b) * x.h * x.w;
        T* dst = y.v.data() + y.idx(b, co, 0, 0);
        for (int i = 0; i < x.h * x.w; ++i) dst[i] = out(co, m0 + i) + bias;
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = input_;
    if (gy.n != x.n || gy.c != out_ || gy.h != x.h || gy.w != x.w)
      throw std::invalid_argument("conv backward: gradient shape mismatch");
    int m = x.n * x.h * x.w;
    MatrixC gy_mat(out_, m);
    for (int b = 0; b < x.n; ++b)
      for (int co = 0; co < out_; ++co) {
        const T* src = gy.v.data() + gy.idx(b, co, 0, 0);
        size_t m0 = static_cast<size_t>(b) * x.h * x.w;
        for (int i = 0; i < x.h * x.w; ++i) gy_mat(co, m0 + i) = src[i];
      }
    MatrixR cols = im2col(x);
    Eigen::Map<MatrixR> gw(gweight_.data(), out_, in_ * k_ * k_);
    gw.noalias() += gy_mat * cols.transpose();
    for (int co = 0; co < out_; ++co) gbias_[co] += gy_mat.row(co).sum();

    Eigen::Map<const MatrixR> wmat(weight_.data(), out_, in_ * k_ * k_);
    MatrixC gcols = wmat.transpose() * gy_mat;  // K x m
    return col2im(gcols, x);
  }

  std::vector<ParamView<T>> params() {
    return {{"conv.weight", &weight_, &gweight_}, {"conv.bias", &bias_, &gbias_}};
  }

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int ksize() const { return k_; }
  size_t param_count() const { return weight_.size() + bias_.size(); }

 private:
  using MatrixC = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// K x (n*h*w) patch matrix; column (b, y, x) holds the receptive field.
  MatrixR im2col(const Tensor<T>& x) const {
    int K = in_ * k_ * k_;
    MatrixR cols(K, static_cast<Eigen::Index>(x.n) * x.h * x.w);
    for (int b = 0; b < x.n; ++b)
      for (int ci = 0; ci < in_; ++ci) {
        const T* plane = x.v.data() + x.idx(b, ci, 0, 0);
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            int row = (ci * k_ + ky) * k_ + kx;
            T* dst = cols.data() + static_cast<size_t>(row) * cols.cols() +
                     static_cast<size_t>(b) * x.h * x.w;
            for (int y = 0; y < x.h; ++y) {
              int sy = y + ky - pad_;
              if (sy < 0 || sy >= x.h) {
                for (int xx = 0; xx < x.w; ++xx) dst[y * x.w + xx] = T(0);
                continue;
              }
              const T* srow = plane + static_cast<size_t>(sy) * x.w;
              for (int xx = 0; xx < x.w; ++xx) {
                int sx = xx + kx - pad_;
                dst[y * x.w + xx] = (sx < 0 || sx >= x.w) ? T(0) : srow[sx];
              }
            }
          }
      }
    return cols;
  }

  Tensor<T> col2im(const MatrixC& gcols, const Tensor<T>& x) const {
    Tensor<T> gx(x.n, in_, x.h, x.w);
    gx.fill(T(0));
    for (int b = 0; b < x.n; ++b)
      for (int ci = 0; ci < in_; ++ci) {
        T* plane = gx.v.data() + gx.idx(b, ci, 0, 0);
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            int row = (ci * k_ + ky) * k_ + kx;
            size_t m0 = static_cast<size_t>(b) * x.h * x.w;
            for (int y = 0; y < x.h; ++y) {
              int sy = y + ky - pad_;
              if (sy < 0 || sy >= x.h) continue;
              T* srow = plane + static_cast<size_t>(sy) * x.w;
              for (int xx = 0; xx < x.w; ++xx) {
                int sx = xx + kx - pad_;
                if (sx < 0 || sx >= x.w) continue;
                srow[sx] += gcols(row, m0 + static_cast<size_t>(y) * x.w + xx);
              }
            }
          }
      }
    return gx;
  }

  int in_ = 0, out_ = 0, k_ = 3, pad_ = 1;
  std::vector<T> weight_, bias_, gweight_, gbias_;
  Tensor<T> input_;
};

/// Per-channel batch normalisation over (batch, H, W).
template <typename T>
class BatchNorm2d {
 public:
  static constexpr T kEps = T(1e-5);
  static constexpr T kMomentum = T(0.9);  ///< fraction of the old running value kept

  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels) : ch_(channels) {
    gamma_.assign(ch_, T(1));
    beta_.assign(ch_, T(0));
    ggamma_.assign(ch_, T(0));
    gbeta_.assign(ch_, T(0));
    running_mean_.assign(ch_, T(0));
    running_var_.assign(ch_, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c != ch_) throw std::invalid_argument("bn: channel mismatch");
    mode_ = mode;
    int count = x.n * x.h * x.w;
    if (mode == Mode::Train && count < 2)
      throw std::invalid_argument("bn: train mode needs >= 2 elements per channel");
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    invstd_.assign(ch_, T(0));
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int c = 0; c < ch_; ++c) {
      T mean, var;
      if (mode == Mode::Train) {
        T sum = T(0), sq = T(0);
        for (int b = 0; b < x.n; ++b) {
          const T* p = x.v.data() + x.idx(b, c, 0, 0);
          for (int i = 0; i < x.h * x.w; ++i) {
            sum += p[i];
            sq += p[i] * p[i];
          }
        }
        mean = sum / count;
        var = sq / count - mean * mean;
        if (var < T(0)) var = T(0);
        T unbiased = var * count / (count - 1);
        running_mean_[c] = kMomentum * running_mean_[c] + (T(1) - kMomentum) * mean;
        running_var_[c] = kMomentum * running_var_[c] + (T(1) - kMomentum) * unbiased;
      } else {
        mean = running_mean_[c];
        var = running_var_[c];
      }
      T inv = T(1) / std::sqrt(var + kEps);
      invstd_[c] = inv;
      for (int b = 0; b < x.n; ++b) {
        const T* p = x.v.data() + x.idx(b, c, 0, 0);
        T* ph = xhat_.v.data() + xhat_.idx(b, c, 0, 0);
        T* py = y.v.data() + y.idx(b, c, 0, 0);
        for (int i = 0; i < x.h * x.w; ++i) {
          ph[i] = (p[i] - mean) * inv;
          py[i] = gamma_[c] * ph[i] + beta_[c];
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (!gy.same_shape(xhat_)) throw std::invalid_argument("bn backward: shape mismatch");
    int count = gy.n * gy.h * gy.w;
    Tensor<T> gx(gy.n, gy.c, gy.h, gy.w);
    for (int c = 0; c < ch_; ++c) {
      T sum_gy = T(0), sum_gy_xhat = T(0);
      for (int b = 0; b < gy.n; ++b) {
        const T* pg = gy.v.data() + gy.idx(b, c, 0, 0);
        const T* ph = xhat_.v.data() + xhat_.idx(b, c, 0, 0);
        for (int i = 0; i < gy.h * gy.w; ++i) {
          sum_gy += pg[i];
          sum_gy_xhat += pg[i] * ph[i];
        }
      }
      ggamma_[c] += sum_gy_xhat;
      gbeta_[c] += sum_gy;
      T scale = gamma_[c] * invstd_[c];
      for (int b = 0; b < gy.n; ++b) {
        const T* pg = gy.v.data() + gy.idx(b, c, 0, 0);
        const T* ph = xhat_.v.data() + xhat_.idx(b, c, 0, 0);
        T* px = gx.v.data() + gx.idx(b, c, 0, 0);
        if (mode_ == Mode::Train) {
          for (int i = 0; i < gy.h * gy.w; ++i)
            px[i] = scale * (pg[i] - sum_gy / count - ph[i] * sum_gy_xhat / count);
        } else {
          for (int i = 0; i < gy.h * gy.w; ++i) px[i] = scale * pg[i];
        }
      }
    }
    return gx;
  }

  std::vector<ParamView<T>> params() {
    return {{"bn.gamma", &gamma_, &ggamma_}, {"bn.beta", &beta_, &gbeta_}};
  }
  std::vector<StateView<T>> state() {
    return {{"bn.running_mean", &running_mean_}, {"bn.running_var", &running_var_}};
  }
  size_t param_count() const { return gamma_.size() + beta_.size(); }

 private:
  int ch_ = 0;
  Mode mode_ = Mode::Train;
  std::vector<T> gamma_, beta_, ggamma_, gbeta_;
  std::vector<T> running_mean_, running_var_;
  std::vector<T> invstd_;
  Tensor<T> xhat_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    mask_.assign(x.size(), 0);
    Tensor<T> y = x;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x.v[i] > T(0)) {
        mask_[i] = 1;
      } else {
        y.v[i] = T(0);  // subgradient at 0 defined as 0
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (gy.size() != mask_.size()) throw std::invalid_argument("relu backward: shape mismatch");
    Tensor<T> gx = gy;
    for (size_t i = 0; i < gy.size(); ++i)
      if (!mask_[i]) gx.v[i] = T(0);
    return gx;
  }

 private:
  std::vector<char> mask_;
};

/// Max pooling with (ph, pw) in {(2,1), (2,2), (1,1)}; ties resolve to the
/// first (row-major) index so the backward routing is deterministic.
template <typename T>
class MaxPool2d {
 public:
  MaxPool2d() = default;
  MaxPool2d(int ph, int pw) : ph_(ph), pw_(pw) {
    if (ph < 1 || pw < 1) throw std::invalid_argument("pool: bad shape");
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.h % ph_ != 0 || x.w % pw_ != 0)
      throw std::invalid_argument("pool: dims not divisible by pool shape");
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor<T> y(x.n, x.c, x.h / ph_, x.w / pw_);
    argmax_.assign(y.size(), 0);
    size_t o = 0;
    for (int b = 0; b < x.n; ++b)
      for (int c = 0; c < x.c; ++c)
        for (int y0 = 0; y0 < x.h; y0 += ph_)
          for (int x0 = 0; x0 < x.w; x0 += pw_) {
            T best = x.at(b, c, y0, x0);
            size_t best_idx = x.idx(b, c, y0, x0);
            for (int dy = 0; dy < ph_; ++dy)
              for (int dx = 0; dx < pw_; ++dx) {
                T v = x.at(b, c, y0 + dy, x0 + dx);
                if (v > best) {
                  best = v;
                  best_idx = x.idx(b, c, y0 + dy, x0 + dx);
                }
              }
            y.v[o] = best;
            argmax_[o] = best_idx;
            ++o;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (gy.size() != argmax_.size()) throw std::invalid_argument("pool backward: shape mismatch");
    Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    gx.fill(T(0));
    for (size_t o = 0; o < gy.size(); ++o) gx.v[argmax_[o]] += gy.v[o];
    return gx;
  }

  int ph() const { return ph_; }
  int pw() const { return pw_; }

 private:
  int ph_ = 2, pw_ = 1;
  std::vector<size_t> argmax_;
  std::array<int, 4> in_shape_{};
};

/// Bilinear upsampling (align_corners = false); backward is the exact
/// transpose of the interpolation.
template <typename T>
class BilinearUpsample {
 public:
  BilinearUpsample() = default;
  BilinearUpsample(int fh, int fw) : fh_(fh), fw_(fw) {
    if (fh < 1 || fw < 1) throw std::invalid_argument("upsample: bad factor");
  }

  Tensor<T> forward(const Tensor<T>& x) {
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor<T> y(x.n, x.c, x.h * fh_, x.w * fw_);
    auto tap = [](int o, int f, int n, int& i0, int& i1, T& w1) {
      T pos = (T(o) + T(0.5)) / T(f) - T(0.5);
      T fl = std::floor(pos);
      w1 = pos - fl;
      int base = static_cast<int>(fl);
      i0 = std::clamp(base, 0, n - 1);
      i1 = std::clamp(base + 1, 0, n - 1);
    };
    for (int oy = 0; oy < y.h; ++oy) {
      int y0, y1;
      T wy;
      tap(oy, fh_, x.h, y0, y1, wy);
      for (int ox = 0; ox < y.w; ++ox) {
        int x0, x1;
        T wx;
        tap(ox, fw_, x.w, x0, x1, wx);
        for (int b = 0; b < x.n; ++b)
          for (int c = 0; c < x.c; ++c)
            y.at(b, c, oy, ox) = (T(1) - wy) * ((T(1) - wx) * x.at(b, c, y0, x0) +
                                                wx * x.at(b, c, y0, x1)) +
                                 wy * ((T(1) - wx) * x.at(b, c, y1, x0) +
                                       wx * x.at(b, c, y1, x1));
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    gx.fill(T(0));
    auto tap = [](int o, int f, int n, int& i0, int& i1, T& w1) {
      T pos = (T(o) + T(0.5)) / T(f) - T(0.5);
      T fl = std::floor(pos);
      w1 = pos - fl;
      int base = static_cast<int>(fl);
      i0 = std::clamp(base, 0, n - 1);
      i1 = std::clamp(base + 1, 0, n - 1);
    };
    for (int oy = 0; oy < gy.h; ++oy) {
      int y0, y1;
      T wy;
      tap(oy, fh_, gx.h, y0, y1, wy);
      for (int ox = 0; ox < gy.w; ++ox) {
        int x0, x1;
        T wx;
        tap(ox, fw_, gx.w, x0, x1, wx);
        for (int b = 0; b < gy.n; ++b)
          for (int c = 0; c < gy.c; ++c) {
            T g = gy.at(b, c, oy, ox);
            gx.at(b, c, y0, x0) += (T(1) - wy) * (T(1) - wx) * g;
            gx.at(b, c, y0, x1) += (T(1) - wy) * wx * g;
            gx.at(b, c, y1, x0) += wy * (T(1) - wx) * g;
            gx.at(b, c, y1, x1) += wy * wx * g;
          }
      }
    }
    return gx;
  }

 private:
  int fh_ = 2, fw_ = 1;
  std::array<int, 4> in_shape_{};
};

}  // namespace stcine::nn
