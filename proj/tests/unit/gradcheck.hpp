#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rep3net/nn/tensor.hpp"

namespace gradcheck {

// Small enough that a step rarely crosses a ReLU or max-pool kink.
inline constexpr double kEps = 1e-5;
inline constexpr double kRelTol = 1e-4;
// Gradients smaller than this are compared on an absolute scale.
inline constexpr double kFloor = 1e-4;

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

struct Result {
  double max_rel = 0.0;
  std::string worst;
};

/// Central differences of `loss` with respect to every entry of `x`,
/// compared against `analytic` (same shape as x).
inline Result check(std::vector<double>& x, const std::vector<double>& analytic, const std::function<double()>& loss,
                    const std::string& name, double eps = kEps) {
  Result r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = loss();
    x[i] = keep - eps;
    const double down = loss();
    x[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    const double e = rel_error(analytic[i], numeric);
    if (e > r.max_rel) {
      r.max_rel = e;
      r.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[i]) + " numeric " +
                std::to_string(numeric);
    }
  }
  return r;
}

/// Fixed random projection used to turn an output tensor into a scalar.
inline double project(const rep3net::nn::Tensor2D<double>& y, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y.data[i];
  return s;
}

}  // namespace gradcheck
