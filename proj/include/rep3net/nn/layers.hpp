#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rep3net/nn/random.hpp"
#include "rep3net/nn/tensor.hpp"

namespace rep3net::nn {

enum class Mode { kTrain, kEval };

template <class T>
struct Param {
  std::string name;
  Tensor2D<T> value;
  Tensor2D<T> grad;
  Tensor2D<T> adam_m;
  Tensor2D<T> adam_v;
  long step = 0;

  Param() = default;
  Param(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), adam_m(rows, cols), adam_v(rows, cols) {}

  void zero_grad() { grad.zero(); }
};

/// y = x W + b with W stored (in x out). Stateless: the caller keeps the
/// forward input for backward.
template <class T>
struct Linear {
  Param<T> weight;
  Param<T> bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

  std::size_t in_features() const { return weight.value.rows; }
  std::size_t out_features() const { return weight.value.cols; }

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
    for (T& w : weight.value.data) w = static_cast<T>(rng.uniform(-bound, bound));
    for (T& b : bias.value.data) b = static_cast<T>(rng.uniform(-bound, bound));
  }

  Tensor2D<T> forward(const Tensor2D<T>& x) const {
    require(x.cols == in_features(), "linear: input width " + std::to_string(x.cols) + " != " +
                                         std::to_string(in_features()));
    Tensor2D<T> y = matmul(x, weight.value);
    for (std::size_t i = 0; i < y.rows; ++i) {
      for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += bias.value.data[j];
    }
    return y;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Tensor2D<T> backward(const Tensor2D<T>& x, const Tensor2D<T>& dy, bool need_input_grad = true) {
    require(dy.rows == x.rows && dy.cols == out_features(), "linear: gradient shape mismatch");
    const Tensor2D<T> dw = matmul_tn(x, dy);
    for (std::size_t i = 0; i < dw.size(); ++i) weight.grad.data[i] += dw.data[i];
    for (std::size_t j = 0; j < dy.cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < dy.rows; ++i) s += dy(i, j);
      bias.grad.data[j] += static_cast<T>(s);
    }
    if (!need_input_grad) return {};
    return matmul_nt(dy, weight.value);
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }
};

template <class T>
struct BatchNormCache {
  Tensor2D<T> x_hat;
  std::vector<double> inv_std;
  Mode mode = Mode::kTrain;
};

/// Batch normalization over the rows of a (batch x features) input.
template <class T>
struct BatchNorm1d {
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  Param<T> gamma;
  Param<T> beta;
  Tensor2D<T> running_mean;
  Tensor2D<T> running_var;

  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, std::size_t features)
      : gamma(name + ".gamma", 1, features),
        beta(name + ".beta", 1, features),
        running_mean(1, features, T(0)),
        running_var(1, features, T(1)) {
    std::fill(gamma.value.data.begin(), gamma.value.data.end(), T(1));
  }

  std::size_t features() const { return gamma.value.cols; }

  Tensor2D<T> forward(const Tensor2D<T>& x, Mode mode, BatchNormCache<T>* cache) {
    require(x.cols == features(), "batchnorm: width mismatch");
    const std::size_t n = x.rows;
    Tensor2D<T> y(n, x.cols);
    BatchNormCache<T> local;
    BatchNormCache<T>& c = cache ? *cache : local;
    c.mode = mode;
    c.x_hat = Tensor2D<T>(n, x.cols);
    c.inv_std.assign(x.cols, 0.0);
    if (mode == Mode::kTrain) {
      if (n < 2) throw ShapeError("batchnorm: training mode needs a batch of at least 2");
      for (std::size_t j = 0; j < x.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kEps);
        c.inv_std[j] = inv;
        for (std::size_t i = 0; i < n; ++i) {
          const double xh = (x(i, j) - mean) * inv;
          c.x_hat(i, j) = static_cast<T>(xh);
          y(i, j) = static_cast<T>(gamma.value.data[j] * xh + beta.value.data[j]);
        }
        const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
        running_mean.data[j] = static_cast<T>((1.0 - kMomentum) * running_mean.data[j] + kMomentum * mean);
        running_var.data[j] = static_cast<T>((1.0 - kMomentum) * running_var.data[j] + kMomentum * unbiased);
      }
    } else {
      for (std::size_t j = 0; j < x.cols; ++j) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var.data[j]) + kEps);
        c.inv_std[j] = inv;
        for (std::size_t i = 0; i < n; ++i) {
          const double xh = (x(i, j) - static_cast<double>(running_mean.data[j])) * inv;
          c.x_hat(i, j) = static_cast<T>(xh);
          y(i, j) = static_cast<T>(gamma.value.data[j] * xh + beta.value.data[j]);
        }
      }
    }
    return y;
  }

  Tensor2D<T> backward(const BatchNormCache<T>& c, const Tensor2D<T>& dy) {
    const std::size_t n = dy.rows;
    require(c.x_hat.rows == n && dy.cols == features(), "batchnorm: gradient shape mismatch");
    Tensor2D<T> dx(n, dy.cols);
    for (std::size_t j = 0; j < dy.cols; ++j) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_dy += dy(i, j);
        sum_dy_xhat += static_cast<double>(dy(i, j)) * c.x_hat(i, j);
      }
      gamma.grad.data[j] += static_cast<T>(sum_dy_xhat);
      beta.grad.data[j] += static_cast<T>(sum_dy);
      const double g = gamma.value.data[j];
      if (c.mode == Mode::kTrain) {
        const double scale = g * c.inv_std[j] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          dx(i, j) = static_cast<T>(scale * (static_cast<double>(n) * dy(i, j) - sum_dy - c.x_hat(i, j) * sum_dy_xhat));
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) dx(i, j) = static_cast<T>(g * c.inv_std[j] * dy(i, j));
      }
    }
    return dx;
  }

  std::vector<Param<T>*> params() { return {&gamma, &beta}; }
};

template <class T>
Tensor2D<T> relu(const Tensor2D<T>& x) {
  Tensor2D<T> y = x;
  for (T& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

/// Gradient of relu given its forward input.
template <class T>
Tensor2D<T> relu_backward(const Tensor2D<T>& x, const Tensor2D<T>& dy) {
  Tensor2D<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x.data[i] > T(0))) dx.data[i] = T(0);
  }
  return dx;
}

/// Inverted dropout. The mask holds 0 or 1/(1-p) per element; in eval mode
/// (or p = 0) the mask is empty and the layer is the identity. One uniform
/// draw per element, row-major, in training mode.
template <class T>
struct DropoutMask {
  Tensor2D<T> scale;
  bool identity() const { return scale.data.empty(); }
};

inline void check_dropout_p(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ShapeError("dropout probability must lie in [0, 1)");
}

template <class T>
Tensor2D<T> dropout(const Tensor2D<T>& x, double p, Mode mode, Rng& rng, DropoutMask<T>* mask) {
  check_dropout_p(p);
  DropoutMask<T> local;
  DropoutMask<T>& m = mask ? *mask : local;
  m.scale = {};
  if (mode == Mode::kEval || p == 0.0) return x;
  m.scale = Tensor2D<T>(x.rows, x.cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor2D<T> y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.scale.data[i] = rng.uniform() >= p ? keep_scale : T(0);
    y.data[i] = x.data[i] * m.scale.data[i];
  }
  return y;
}

template <class T>
Tensor2D<T> dropout_backward(const DropoutMask<T>& mask, const Tensor2D<T>& dy) {
  if (mask.identity()) return dy;
  Tensor2D<T> dx(dy.rows, dy.cols);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = dy.data[i] * mask.scale.data[i];
  return dx;
}

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // dL/dpred_i = 2 (pred_i - target_i) / n
};

inline LossResult mse_loss(const std::vector<double>& pred, const std::vector<double>& target) {
  if (pred.empty()) throw ShapeError("mse_loss: empty input");
  require(pred.size() == target.size(), "mse_loss: length mismatch");
  LossResult r;
  r.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  if (!std::isfinite(r.loss)) throw NumericError("mse_loss: non-finite loss");
  return r;
}

}  // namespace rep3net::nn
