#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rep3net/graph/molgraph.hpp"
#include "rep3net/nn/layers.hpp"

namespace rep3net::gcn {

using nn::Mode;
using nn::Tensor2D;

/// Sum that depends only on the multiset of terms, not their order, so
/// cross-node reductions are exactly invariant under node renumbering.
inline double order_free_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

/// Symmetric-normalized neighbor sum: row v = sum over u in N(v) of
/// h_u / sqrt(d_u d_v). No self-loops.
template <class T>
Tensor2D<T> normalized_aggregate(const graph::MolecularGraph& g, const Tensor2D<T>& h) {
  nn::require(h.rows == static_cast<std::size_t>(g.n), "aggregate: feature rows != node count");
  Tensor2D<T> out(h.rows, h.cols);
  std::vector<double> terms;
  for (int v = 0; v < g.n; ++v) {
    for (std::size_t c = 0; c < h.cols; ++c) {
      terms.clear();
      for (int u : g.neighbors[v]) {
        const double w = 1.0 / std::sqrt(static_cast<double>(g.degrees[u]) * g.degrees[v]);
        terms.push_back(w * static_cast<double>(h(static_cast<std::size_t>(u), c)));
      }
      out(static_cast<std::size_t>(v), c) = static_cast<T>(order_free_sum(terms));
    }
  }
  return out;
}

/// Everything the backward pass needs from one molecule's forward pass.
template <class T>
struct GcnTape {
  Tensor2D<T> input;      // n x F node features
  Tensor2D<T> aggregated;  // normalized neighbor sums of the input
  Tensor2D<T> res_pre;     // residual projection before ReLU
  nn::DropoutMask<T> mask;
  Tensor2D<T> h;           // node states after dropout
  std::vector<double> gate;        // sigmoid gate per node
  std::vector<int> argmax;         // per channel
};

/// Graph convolution with a ReLU residual projection and a gated-sum plus
/// max readout. Output width is 2 * hidden.
template <class T>
struct GcnBlock {
  nn::Linear<T> conv;
  nn::Linear<T> residual;
  nn::Linear<T> gate;
  double dropout_p = 0.1;

  GcnBlock() = default;
  GcnBlock(std::size_t in_features, std::size_t hidden, double p)
      : conv("gcn.conv", in_features, hidden),
        residual("gcn.res", in_features, hidden),
        gate("gcn.gate", hidden, 1),
        dropout_p(p) {
    nn::check_dropout_p(p);
  }

  std::size_t hidden() const { return conv.out_features(); }
  std::size_t output_width() const { return 2 * hidden(); }

  void init(nn::Rng& rng) {
    conv.init(rng);
    residual.init(rng);
    gate.init(rng);
  }

  /// out_v = b + W * sum_{u in N(v)} h_u / sqrt(d_u d_v)
  Tensor2D<T> graph_conv(const graph::MolecularGraph& g, const Tensor2D<T>& h) const {
    if (g.n == 0) throw ShapeError("graph_conv: graph has no nodes");
    return conv.forward(normalized_aggregate(g, h));
  }

  Tensor2D<T> forward(const graph::MolecularGraph& g, Mode mode, nn::Rng& rng, GcnTape<T>* tape) const {
    if (g.n == 0) throw ShapeError("gcn: graph has no nodes");
    GcnTape<T> local;
    GcnTape<T>& t = tape ? *tape : local;
    t.input = g.node_features.template cast<T>();
    t.aggregated = normalized_aggregate(g, t.input);
    const Tensor2D<T> conv_out = conv.forward(t.aggregated);
    t.res_pre = residual.forward(t.input);
    Tensor2D<T> combined = nn::relu(t.res_pre);
    for (std::size_t i = 0; i < combined.size(); ++i) combined.data[i] += conv_out.data[i];
    t.h = nn::dropout(combined, dropout_p, mode, rng, &t.mask);
    return readout(t);
  }

  /// Accumulates parameter gradients from dL/d(readout), a 1 x 2H row.
  void backward(const graph::MolecularGraph& g, GcnTape<T>& t, const Tensor2D<T>& d_out) {
    const std::size_t n = static_cast<std::size_t>(g.n), H = hidden();
    nn::require(d_out.rows == 1 && d_out.cols == 2 * H, "gcn: readout gradient shape");
    Tensor2D<T> dh(n, H);
    Tensor2D<T> dz(n, 1);
    for (std::size_t v = 0; v < n; ++v) {
      double dot = 0.0;
      for (std::size_t c = 0; c < H; ++c) dot += static_cast<double>(d_out.data[c]) * t.h(v, c);
      const double s = t.gate[v];
      dz(v, 0) = static_cast<T>(dot * s * (1.0 - s));
      for (std::size_t c = 0; c < H; ++c) dh(v, c) = static_cast<T>(s * d_out.data[c]);
    }
    for (std::size_t c = 0; c < H; ++c) {
      dh(static_cast<std::size_t>(t.argmax[c]), c) += d_out.data[H + c];
    }
    const Tensor2D<T> dh_from_gate = gate.backward(t.h, dz);
    for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += dh_from_gate.data[i];

    const Tensor2D<T> dcombined = nn::dropout_backward(t.mask, dh);
    conv.backward(t.aggregated, dcombined, false);
    residual.backward(t.input, nn::relu_backward(t.res_pre, dcombined), false);
  }

  std::vector<nn::Param<T>*> params() { return {&conv.weight, &conv.bias, &residual.weight, &residual.bias,
                                                &gate.weight, &gate.bias}; }

 private:
  Tensor2D<T> readout(GcnTape<T>& t) const {
    const std::size_t n = t.h.rows, H = hidden();
    const Tensor2D<T> z = gate.forward(t.h);
    t.gate.assign(n, 0.0);
    t.argmax.assign(H, 0);
    for (std::size_t v = 0; v < n; ++v) t.gate[v] = 1.0 / (1.0 + std::exp(-static_cast<double>(z(v, 0))));
    Tensor2D<T> out(1, 2 * H);
    std::vector<double> terms(n);
    for (std::size_t c = 0; c < H; ++c) {
      for (std::size_t v = 0; v < n; ++v) terms[v] = t.gate[v] * static_cast<double>(t.h(v, c));
      out.data[c] = static_cast<T>(order_free_sum(terms));
      int best = 0;
      for (std::size_t v = 1; v < n; ++v) {
        if (t.h(v, c) > t.h(static_cast<std::size_t>(best), c)) best = static_cast<int>(v);
      }
      t.argmax[c] = best;
      out.data[H + c] = t.h(static_cast<std::size_t>(best), c);
    }
    nn::check_finite(out, "gcn readout");
    return out;
  }
};

}  // namespace rep3net::gcn
