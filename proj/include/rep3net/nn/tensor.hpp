#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rep3net/error.hpp"

namespace rep3net::nn {

/// Dense row-major matrix. Reductions accumulate in double regardless of T.
template <class T>
struct Tensor2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Tensor2D() = default;
  Tensor2D(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  T* row(std::size_t r) { return data.data() + r * cols; }
  const T* row(std::size_t r) const { return data.data() + r * cols; }
  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  template <class U>
  Tensor2D<U> cast() const {
    Tensor2D<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  friend bool operator==(const Tensor2D&, const Tensor2D&) = default;
};

using Tensor = Tensor2D<float>;

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

/// Throws NumericError naming `where` if any entry is NaN or infinite.
template <class T>
void check_finite(const Tensor2D<T>& t, const char* where) {
  for (const T& v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) throw NumericError(std::string("non-finite value in ") + where);
  }
}

/// a (n x k) * b (k x m)
template <class T>
Tensor2D<T> matmul(const Tensor2D<T>& a, const Tensor2D<T>& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  Tensor2D<T> out(a.rows, b.cols);
  std::vector<double> acc(b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* ar = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = ar[k];
      if (av == 0.0) continue;
      const T* br = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) acc[j] += av * static_cast<double>(br[j]);
    }
    T* o = out.row(i);
    for (std::size_t j = 0; j < b.cols; ++j) o[j] = static_cast<T>(acc[j]);
  }
  return out;
}

/// a^T (k x n)^T * b (k x m) -> n x m
template <class T>
Tensor2D<T> matmul_tn(const Tensor2D<T>& a, const Tensor2D<T>& b) {
  require(a.rows == b.rows, "matmul_tn: row counts differ");
  std::vector<double> acc(a.cols * b.cols, 0.0);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const T* ar = a.row(k);
    const T* br = b.row(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* accr = acc.data() + i * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) accr[j] += av * static_cast<double>(br[j]);
    }
  }
  Tensor2D<T> out(a.cols, b.cols);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<T>(acc[i]);
  return out;
}

/// a (n x k) * b^T (m x k)^T -> n x m
template <class T>
Tensor2D<T> matmul_nt(const Tensor2D<T>& a, const Tensor2D<T>& b) {
  require(a.cols == b.cols, "matmul_nt: column counts differ");
  Tensor2D<T> out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* ar = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const T* br = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += static_cast<double>(ar[k]) * static_cast<double>(br[k]);
      out(i, j) = static_cast<T>(acc);
    }
  }
  return out;
}

}  // namespace rep3net::nn
