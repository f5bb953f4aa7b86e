#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stcine/nn/layers.hpp"

namespace stcine::nn {

struct UNetConfig {
  int stages = 3;           ///< E: encoding stages
  int convs_per_stage = 4;  ///< C
  int base_features = 64;
  int pool_h = 2;
  int pool_w = 1;  ///< (2,1) contracts only the spatial axis of xt/yt slices
  int in_channels = 1;
  int out_channels = 1;
  bool residual = true;

  void validate() const {
    if (stages < 1 || convs_per_stage < 1 || base_features < 1)
      throw std::invalid_argument("unet: E, C and base features must be >= 1");
    if ((pool_h != 1 && pool_h != 2) || (pool_w != 1 && pool_w != 2))
      throw std::invalid_argument("unet: pool factors must be 1 or 2");
    if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("unet: bad channel count");
    if (residual && in_channels != out_channels)
      throw std::invalid_argument("unet: residual connection needs matching channel counts");
  }

  int features_at(int stage) const { return base_features << stage; }
  int pool_div_h() const { return 1 << ((stages - 1) * (pool_h == 2 ? 1 : 0)); }
  int pool_div_w() const { return 1 << ((stages - 1) * (pool_w == 2 ? 1 : 0)); }
};

/// conv 3x3 -> batch norm -> ReLU.
template <typename T>
struct ConvBlock {
  Conv2d<T> conv;
  BatchNorm2d<T> bn;
  ReLU<T> relu;

  ConvBlock() = default;
  ConvBlock(int in_ch, int out_ch) : conv(in_ch, out_ch, 3), bn(out_ch) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    return relu.forward(bn.forward(conv.forward(x), mode));
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return conv.backward(bn.backward(relu.backward(gy)));
  }
};

/// Residual-capable U-net: E encoder stages of C conv blocks with feature
/// doubling, pooling in between, mirrored decoder with bilinear upsampling,
/// an unactivated 3x3 conv, skip concatenation (upsampled first), and a
/// final 1x1 conv. With the residual flag the output is input + trunk.
template <typename T>
class UNet {
 public:
  UNet() = default;

  explicit UNet(const UNetConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    int e = cfg.stages;
    encoder_.resize(e);
    for (int s = 0; s < e; ++s) {
      int feat = cfg.features_at(s);
      int in_ch = s == 0 ? cfg.in_channels : cfg.features_at(s - 1);
      for (int c = 0; c < cfg.convs_per_stage; ++c) {
        encoder_[s].emplace_back(c == 0 ? in_ch : feat, feat);
      }
    }
    pools_.assign(e - 1, MaxPool2d<T>(cfg.pool_h, cfg.pool_w));
    decoder_.resize(e - 1);
    for (int i = 0; i < e - 1; ++i) {
      int s = e - 2 - i;  // decoder runs from the bottleneck outwards
      auto& dec = decoder_[i];
      dec.up = BilinearUpsample<T>(cfg.pool_h, cfg.pool_w);
      dec.up_conv = Conv2d<T>(cfg.features_at(s + 1), cfg.features_at(s), 3);
      int feat = cfg.features_at(s);
      for (int c = 0; c < cfg.convs_per_stage; ++c)
        dec.blocks.emplace_back(c == 0 ? 2 * feat : feat, feat);
    }
    final_ = Conv2d<T>(cfg.base_features, cfg.out_channels, 1);
  }

  /// Draws conv weights in declaration order from one seeded stream.
  void init(uint64_t seed) {
    Rng rng(seed);
    for (auto& stage : encoder_)
      for (auto& blk : stage) blk.conv.init(rng);
    for (auto& dec : decoder_) {
      dec.up_conv.init(rng);
      for (auto& blk : dec.blocks) blk.conv.init(rng);
    }
    final_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c != cfg_.in_channels) throw std::invalid_argument("unet: input channel mismatch");
    if (x.h % cfg_.pool_div_h() != 0 || x.w % cfg_.pool_div_w() != 0)
      throw std::invalid_argument("unet: input extent not divisible by the pooling depth");
    if (cfg_.residual) input_ = x;
    skips_.clear();
    Tensor<T> cur = x;
    for (int s = 0; s < cfg_.stages; ++s) {
      if (s > 0) cur = pools_[s - 1].forward(cur);
      for (auto& blk : encoder_[s]) cur = blk.forward(cur, mode);
      if (s < cfg_.stages - 1) skips_.push_back(cur);
    }
    for (size_t i = 0; i < decoder_.size(); ++i) {
      auto& dec = decoder_[i];
      Tensor<T> up = dec.up_conv.forward(dec.up.forward(cur));
      const Tensor<T>& skip = skips_[skips_.size() - 1 - i];
      cur = concat_channels(up, skip);
      for (auto& blk : dec.blocks) cur = blk.forward(cur, mode);
    }
    Tensor<T> out = final_.forward(cur);
    if (cfg_.residual)
      for (size_t i = 0; i < out.size(); ++i) out.v[i] += input_.v[i];
    return out;
  }

  /// Accumulates parameter gradients; returns the gradient w.r.t. the input.
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = final_.backward(gy);
    std::vector<Tensor<T>> skip_grads(decoder_.size());
    for (size_t i = decoder_.size(); i-- > 0;) {  // reverse execution order
      auto& d = decoder_[i];
      for (size_t b = d.blocks.size(); b-- > 0;) g = d.blocks[b].backward(g);
      int up_ch = d.up_conv.out_channels();
      auto [gu, gskip] = split_channels(g, up_ch);
      skip_grads[skips_.size() - 1 - i] = std::move(gskip);
      g = d.up.backward(d.up_conv.backward(gu));
    }
    for (int s = cfg_.stages - 1; s >= 0; --s) {
      if (s < cfg_.stages - 1)
        for (size_t j = 0; j < g.size(); ++j) g.v[j] += skip_grads[s].v[j];
      for (size_t b = encoder_[s].size(); b-- > 0;) g = encoder_[s][b].backward(g);
      if (s > 0) g = pools_[s - 1].backward(g);
    }
    if (cfg_.residual)
      for (size_t i = 0; i < g.size(); ++i) g.v[i] += gy.v[i];
    return g;
  }

  std::vector<ParamView<T>> params() {
    std::vector<ParamView<T>> out;
    auto add = [&out](const std::string& prefix, std::vector<ParamView<T>> views) {
      for (auto& v : views) {
        v.name = prefix + "." + v.name;
        out.push_back(v);
      }
    };
    for (size_t s = 0; s < encoder_.size(); ++s)
      for (size_t b = 0; b < encoder_[s].size(); ++b) {
        std::string p = "enc" + std::to_string(s) + ".blk" + std::to_string(b);
        add(p, encoder_[s][b].conv.params());
        add(p, encoder_[s][b].bn.params());
      }
    for (size_t i = 0; i < decoder_.size(); ++i) {
      std::string p = "dec" + std::to_string(i);
      add(p + ".up", decoder_[i].up_conv.params());
      for (size_t b = 0; b < decoder_[i].blocks.size(); ++b) {
        std::string q = p + ".blk" + std::to_string(b);
        add(q, decoder_[i].blocks[b].conv.params());
        add(q, decoder_[i].blocks[b].bn.params());
      }
    }
    add("final", final_.params());
    return out;
  }

  std::vector<StateView<T>> state() {
    std::vector<StateView<T>> out;
    for (size_t s = 0; s < encoder_.size(); ++s)
      for (size_t b = 0; b < encoder_[s].size(); ++b)
        for (auto& v : encoder_[s][b].bn.state()) out.push_back(v);
    for (size_t i = 0; i < decoder_.size(); ++i)
      for (size_t b = 0; b < decoder_[i].blocks.size(); ++b)
        for (auto& v : decoder_[i].blocks[b].bn.state()) out.push_back(v);
    return out;
  }

  void zero_grads() {
    for (auto& p : params()) std::fill(p.grad->begin(), p.grad->end(), T(0));
  }

  size_t param_count() {
    size_t n = 0;
    for (auto& p : params()) n += p.value->size();
    return n;
  }

  const UNetConfig& config() const { return cfg_; }

 private:
  struct DecoderStage {
    BilinearUpsample<T> up;
    Conv2d<T> up_conv;
    std::vector<ConvBlock<T>> blocks;
  };

  UNetConfig cfg_;
  std::vector<std::vector<ConvBlock<T>>> encoder_;
  std::vector<MaxPool2d<T>> pools_;
  std::vector<DecoderStage> decoder_;
  Conv2d<T> final_;
  std::vector<Tensor<T>> skips_;
  Tensor<T> input_;
};

/// Independent closed-form parameter count for a UNetConfig (weights,
/// biases, batch-norm scale and shift).
inline int64_t expected_param_count(const UNetConfig& cfg) {
  auto conv = [](int64_t in, int64_t out, int64_t k) { return in * out * k * k + out; };
  auto bn = [](int64_t ch) { return 2 * ch; };
  int64_t total = 0;
  for (int s = 0; s < cfg.stages; ++s) {
    int64_t feat = cfg.features_at(s);
    int64_t in_ch = s == 0 ? cfg.in_channels : cfg.features_at(s - 1);
    for (int c = 0; c < cfg.convs_per_stage; ++c) {
      total += conv(c == 0 ? in_ch : feat, feat, 3) + bn(feat);
    }
  }
  for (int s = cfg.stages - 2; s >= 0; --s) {
    int64_t feat = cfg.features_at(s);
    total += conv(cfg.features_at(s + 1), feat, 3);  // upsampling conv
    for (int c = 0; c < cfg.convs_per_stage; ++c)
      total += conv(c == 0 ? 2 * feat : feat, feat, 3) + bn(feat);
  }
  total += conv(cfg.base_features, cfg.out_channels, 1);
  return total;
}

}  // namespace stcine::nn
