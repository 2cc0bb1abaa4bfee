#pragma once

#include <cmath>
#include <functional>

#include "macs/nn.hpp"
#include "macs/rng.hpp"

namespace macs::nn {

// Central finite differences against analytic gradients. loss_fn must
// recompute the loss from the current weight values (dropout disabled).
// Returns max over sampled coordinates of
//   |g_fd - g_an| / max(1, |g_fd|, |g_an|).
template <class Weights>
double grad_check(Weights& weights, Weights& analytic,
                  const std::function<double()>& loss_fn, double step = 1e-3,
                  int coords_per_tensor = 24, std::uint64_t seed = 0) {
  auto wr = named_tensors(weights);
  auto gr = named_tensors(analytic);
  Rng rng(mix_seed({seed, 0x67c6697351ff4aecULL}));
  double worst = 0.0;
  for (std::size_t k = 0; k < wr.size(); ++k) {
    Tensor& w = *wr[k].tensor;
    Tensor& g = *gr[k].tensor;
    const int n = static_cast<int>(w.numel());
    const int samples = n < coords_per_tensor ? n : coords_per_tensor;
    for (int s = 0; s < samples; ++s) {
      const int i = samples == n ? s : rng.uniform_int(0, n - 1);
      const double orig = w.data[static_cast<std::size_t>(i)];
      w.data[static_cast<std::size_t>(i)] = orig + step;
      const double lp = loss_fn();
      w.data[static_cast<std::size_t>(i)] = orig - step;
      const double lm = loss_fn();
      w.data[static_cast<std::size_t>(i)] = orig;
      const double fd = (lp - lm) / (2.0 * step);
      const double an = g.data[static_cast<std::size_t>(i)];
      const double denom = std::max({1.0, std::fabs(fd), std::fabs(an)});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace macs::nn
