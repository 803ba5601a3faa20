#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "rep3net/nn/layers.hpp"

namespace rep3net::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // AdamW-style decay instead of L2 added to the gradient
};

/// One Adam update with bias correction. Coupled mode adds weight_decay * w
/// to the gradient before the moment updates.
template <class T>
void adam_step(const std::vector<Param<T>*>& params, double lr, const AdamConfig& cfg) {
  for (Param<T>* p : params) {
    ++p->step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double w = p->value.data[i];
      double g = p->grad.data[i];
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in " + p->name);
      if (!cfg.decoupled) g += cfg.weight_decay * w;
      const double m = cfg.beta1 * p->adam_m.data[i] + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * p->adam_v.data[i] + (1.0 - cfg.beta2) * g * g;
      p->adam_m.data[i] = static_cast<T>(m);
      p->adam_v.data[i] = static_cast<T>(v);
      if (cfg.decoupled) w -= lr * cfg.weight_decay * w;
      w -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
      if (!std::isfinite(w)) throw NumericError("adam_step: parameter " + p->name + " became non-finite");
      p->value.data[i] = static_cast<T>(w);
    }
  }
}

/// lr_min + (lr0 - lr_min)(1 + cos(pi * epoch / t_max)) / 2
inline double cosine_lr(double epoch, double lr0, double t_max, double lr_min = 0.0) {
  if (t_max <= 0.0) return lr0;
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * epoch / t_max));
}

}  // namespace rep3net::nn
