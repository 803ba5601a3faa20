#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rep3net/gcn/gcn.hpp"
#include "rep3net/graph/molgraph.hpp"
#include "rep3net/nn/layers.hpp"

namespace rep3net::model {

using nn::Mode;
using nn::Tensor2D;

/// Architecture of the fused regressor. Widths of the descriptor and
/// embedding inputs are the post-filter widths the model was built for.
struct ModelShape {
  bool use_descriptors = true;
  bool use_embeddings = true;
  bool use_graph = true;
  std::size_t descriptor_width = 0;
  std::size_t embedding_width = 0;
  std::size_t gcn_hidden = 128;
  double gcn_dropout = 0.1;
  std::size_t fc1 = 512;
  std::size_t fc2 = 128;
  double dropout = 0.2;

  std::size_t graph_width() const { return use_graph ? 2 * gcn_hidden : 0; }
  std::size_t input_width() const {
    return (use_descriptors ? descriptor_width : 0) + (use_embeddings ? embedding_width : 0) + graph_width();
  }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// One compound's model inputs. Descriptor and embedding rows are already
/// normalized with the model's stored statistics; unused modalities may be
/// left empty.
struct ModalityInputs {
  std::vector<double> descriptors;
  std::vector<double> embedding;
  const graph::MolecularGraph* graph = nullptr;
};

/// z = (f - mean(f)) / (std(f) + 1e-6) over the entries of one vector.
struct StandardizeCache {
  std::vector<double> centered;
  double sigma = 0.0;
};

inline std::vector<double> standardize_vector(std::span<const double> f, StandardizeCache* cache) {
  const std::size_t n = f.size();
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = f[i] - mean;
    var += centered[i] * centered[i];
  }
  const double sigma = std::sqrt(var / static_cast<double>(n));
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = centered[i] / (sigma + 1e-6);
  if (cache) {
    cache->centered = std::move(centered);
    cache->sigma = sigma;
  }
  return z;
}

inline std::vector<double> standardize_backward(const StandardizeCache& c, std::span<const double> dz) {
  const std::size_t n = dz.size();
  const double s = c.sigma + 1e-6;
  double mean_dz = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_dz += dz[i];
    dot += dz[i] * c.centered[i];
  }
  mean_dz /= static_cast<double>(n);
  const double k = c.sigma > 0.0 ? dot / (s * s * static_cast<double>(n) * c.sigma) : 0.0;
  std::vector<double> df(n);
  for (std::size_t i = 0; i < n; ++i) df[i] = (dz[i] - mean_dz) / s - k * c.centered[i];
  return df;
}

template <class T>
struct FusionTape {
  std::vector<gcn::GcnTape<T>> gcn;
  std::vector<StandardizeCache> standardize;
  Tensor2D<T> x, h1, r1_pre, h2, r2_pre, d2;
  Tensor2D<T> d1;
  nn::BatchNormCache<T> bn1, bn2;
  nn::DropoutMask<T> mask1, mask2;
};

/// concat(descriptors, embedding, standardized GCN readout) ->
/// FC1 -> BN -> ReLU -> Dropout -> FC2 -> BN -> ReLU -> Dropout -> FC3.
template <class T>
class FusionModel {
 public:
  ModelShape shape;
  gcn::GcnBlock<T> gcn;
  nn::Linear<T> fc1, fc2, fc3;
  nn::BatchNorm1d<T> bn1, bn2;

  FusionModel() = default;
  explicit FusionModel(const ModelShape& s)
      : shape(s),
        fc1("fc1", s.input_width(), s.fc1),
        fc2("fc2", s.fc1, s.fc2),
        fc3("fc3", s.fc2, 1),
        bn1("bn1", s.fc1),
        bn2("bn2", s.fc2) {
    if (!s.use_descriptors && !s.use_embeddings && !s.use_graph) throw ShapeError("at least one modality must be enabled");
    if (s.input_width() == 0) throw ShapeError("fused input width is zero");
    nn::check_dropout_p(s.dropout);
    if (s.use_graph) gcn = gcn::GcnBlock<T>(graph::kAtomFeatureWidth, s.gcn_hidden, s.gcn_dropout);
  }

  /// GCN first, then FC1, FC2, FC3, all from the same stream.
  void init(nn::Rng& rng) {
    if (shape.use_graph) gcn.init(rng);
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng);
  }

  std::vector<double> forward(std::span<const ModalityInputs> batch, Mode mode, nn::Rng& rng, FusionTape<T>* tape) {
    if (batch.empty()) throw ShapeError("forward: empty batch");
    FusionTape<T> local;
    FusionTape<T>& t = tape ? *tape : local;
    const std::size_t B = batch.size(), W = shape.input_width();
    t.x = Tensor2D<T>(B, W);
    t.gcn.assign(shape.use_graph ? B : 0, {});
    t.standardize.assign(shape.use_graph ? B : 0, {});
    for (std::size_t i = 0; i < B; ++i) {
      const ModalityInputs& in = batch[i];
      T* row = t.x.row(i);
      std::size_t col = 0;
      auto put = [&](std::span<const double> v, std::size_t width, const char* what) {
        if (v.size() != width) {
          throw ShapeError(std::string("width mismatch: ") + what + " input has " + std::to_string(v.size()) +
                           " columns, model expects " + std::to_string(width));
        }
        for (double x : v) row[col++] = static_cast<T>(x);
      };
      if (shape.use_descriptors) put(in.descriptors, shape.descriptor_width, "descriptor");
      if (shape.use_embeddings) put(in.embedding, shape.embedding_width, "embedding");
      if (shape.use_graph) {
        if (!in.graph) throw ShapeError("forward: graph modality enabled but no graph supplied");
        const Tensor2D<T> fg = gcn.forward(*in.graph, mode, rng, &t.gcn[i]);
        std::vector<double> f(fg.data.begin(), fg.data.end());
        put(standardize_vector(f, &t.standardize[i]), shape.graph_width(), "graph");
      }
    }
    nn::check_finite(t.x, "fused input");
    t.h1 = fc1.forward(t.x);
    t.r1_pre = bn1.forward(t.h1, mode, &t.bn1);
    t.d1 = nn::dropout(nn::relu(t.r1_pre), shape.dropout, mode, rng, &t.mask1);
    t.h2 = fc2.forward(t.d1);
    t.r2_pre = bn2.forward(t.h2, mode, &t.bn2);
    t.d2 = nn::dropout(nn::relu(t.r2_pre), shape.dropout, mode, rng, &t.mask2);
    const Tensor2D<T> out = fc3.forward(t.d2);
    nn::check_finite(out, "prediction");
    return {out.data.begin(), out.data.end()};
  }

  /// Accumulates parameter gradients from dL/d(prediction).
  void backward(std::span<const ModalityInputs> batch, FusionTape<T>& t, std::span<const double> d_pred) {
    const std::size_t B = batch.size();
    nn::require(d_pred.size() == B && t.x.rows == B, "backward: batch size mismatch");
    Tensor2D<T> dy(B, 1);
    for (std::size_t i = 0; i < B; ++i) dy.data[i] = static_cast<T>(d_pred[i]);
    Tensor2D<T> g = fc3.backward(t.d2, dy);
    g = nn::dropout_backward(t.mask2, g);
    g = nn::relu_backward(t.r2_pre, g);
    g = bn2.backward(t.bn2, g);
    g = fc2.backward(t.d1, g);
    g = nn::dropout_backward(t.mask1, g);
    g = nn::relu_backward(t.r1_pre, g);
    g = bn1.backward(t.bn1, g);
    if (!shape.use_graph) {
      fc1.backward(t.x, g, false);
      return;
    }
    const Tensor2D<T> dx = fc1.backward(t.x, g, true);
    const std::size_t offset = shape.input_width() - shape.graph_width();
    for (std::size_t i = 0; i < B; ++i) {
      std::vector<double> dz(shape.graph_width());
      for (std::size_t c = 0; c < dz.size(); ++c) dz[c] = dx(i, offset + c);
      const std::vector<double> df = standardize_backward(t.standardize[i], dz);
      Tensor2D<T> d_out(1, df.size());
      for (std::size_t c = 0; c < df.size(); ++c) d_out.data[c] = static_cast<T>(df[c]);
      gcn.backward(*batch[i].graph, t.gcn[i], d_out);
    }
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> p;
    if (shape.use_graph) {
      for (auto* q : gcn.params()) p.push_back(q);
    }
    for (auto* q : {&fc1.weight, &fc1.bias, &bn1.gamma, &bn1.beta, &fc2.weight, &fc2.bias, &bn2.gamma, &bn2.beta,
                    &fc3.weight, &fc3.bias}) {
      p.push_back(q);
    }
    return p;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }
};

}  // namespace rep3net::model
