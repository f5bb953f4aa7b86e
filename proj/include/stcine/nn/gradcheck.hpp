#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stcine/nn/unet.hpp"
#include "stcine/rng.hpp"

namespace stcine::nn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

/// Central finite differences against the analytic backward pass on a random
/// parameter subset, under the L2 training loss (mean over batch of squared
/// norms). Runs in eval mode so batch-norm uses frozen statistics; call a
/// train-mode forward first if realistic running stats are wanted.
inline GradCheckResult gradient_check(UNet<double>& net, const Tensor<double>& input,
                                      const Tensor<double>& label, int max_params = 200,
                                      double eps = 1e-5, uint64_t seed = 0) {
  auto loss_of = [&](const Tensor<double>& pred) {
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
      double d = pred.v[i] - label.v[i];
      acc += d * d;
    }
    return acc / pred.n;
  };

  net.zero_grads();
  Tensor<double> pred = net.forward(input, Mode::Eval);
  Tensor<double> gy(pred.n, pred.c, pred.h, pred.w);
  for (size_t i = 0; i < pred.size(); ++i) gy.v[i] = 2.0 * (pred.v[i] - label.v[i]) / pred.n;
  net.backward(gy);

  auto views = net.params();
  std::vector<std::pair<size_t, size_t>> coords;  // (tensor, element)
  for (size_t t = 0; t < views.size(); ++t)
    for (size_t e = 0; e < views[t].value->size(); ++e) coords.emplace_back(t, e);
  Rng rng(seed);
  rng.shuffle(coords);
  size_t n_check = std::min<size_t>(coords.size(), static_cast<size_t>(max_params));

  GradCheckResult res;
  for (size_t i = 0; i < n_check; ++i) {
    auto [t, e] = coords[i];
    double& theta = (*views[t].value)[e];
    double analytic = (*views[t].grad)[e];
    double saved = theta;
    theta = saved + eps;
    double lp = loss_of(net.forward(input, Mode::Eval));
    theta = saved - eps;
    double lm = loss_of(net.forward(input, Mode::Eval));
    theta = saved;
    double numeric = (lp - lm) / (2.0 * eps);
    double rel = std::abs(analytic - numeric) /
                 std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    res.max_rel_err = std::max(res.max_rel_err, rel);
    ++res.checked;
  }
  return res;
}

}  // namespace stcine::nn
