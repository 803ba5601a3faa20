#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rep3net/chem/smiles.hpp"
#include "rep3net/descriptors/descriptors.hpp"
#include "rep3net/model/trainer.hpp"
#include "rep3net/nn/optim.hpp"
#include "rep3net/util/parallel.hpp"

namespace rep3net::model {

void FusionConfig::validate() const {
  auto fail = [](const std::string& what) { throw DataError("invalid config: " + what); };
  if (!use_descriptors && !use_embeddings && !use_graph) fail("at least one modality must be enabled");
  if (gcn_hidden == 0 || fc1 == 0 || fc2 == 0) fail("layer widths must be positive");
  if (!(gcn_dropout >= 0.0 && gcn_dropout < 1.0)) fail("gcn_dropout must lie in [0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (batch_size < 2) fail("batch_size must be at least 2 for batch normalization");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(lr_min >= 0.0) || lr_min > lr) fail("lr_min must lie in [0, lr]");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (epochs < 1) fail("epochs must be at least 1");
  if (!(variance_threshold >= 0.0)) fail("variance_threshold must be non-negative");
  if (!(correlation_threshold > 0.0 && correlation_threshold <= 1.0)) fail("correlation_threshold must lie in (0, 1]");
}

std::string FusionConfig::modality_label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(use_descriptors, "descriptors");
  add(use_embeddings, "embeddings");
  add(use_graph, "graph");
  return s;
}

Dataset build_dataset(const std::vector<data::CuratedCompound>& compounds, const io::EmbeddingStore* store,
                      io::MissingPolicy policy, const desc::DescriptorTable* external, DatasetReport* report) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> external_rows;
  if (external) {
    ds.descriptor_schema = "external";
    ds.descriptor_names = external->columns;
    for (std::size_t i = 0; i < external->keys.size(); ++i) {
      std::string key = external->keys[i];
      try {
        key = chem::canonicalize(key);
      } catch (const chem::SmilesError&) {
        // Keep non-SMILES keys verbatim; they simply never match.
      }
      external_rows.emplace(std::move(key), i);
    }
  } else {
    ds.descriptor_schema = std::string(desc::kSchemaId);
    for (std::string_view n : desc::descriptor_names()) ds.descriptor_names.emplace_back(n);
  }

  for (const data::CuratedCompound& c : compounds) {
    const std::vector<float>* emb = nullptr;
    if (store) {
      emb = store->find(c.canonical_smiles);
      if (!emb) {
        if (policy == io::MissingPolicy::kError) throw DataError("no embedding for '" + c.canonical_smiles + "'");
        if (report) report->missing_embeddings.push_back(c.canonical_smiles);
        continue;
      }
    }
    std::vector<double> descriptors;
    const chem::Molecule mol = chem::parse_smiles(c.canonical_smiles);
    if (external) {
      const auto it = external_rows.find(c.canonical_smiles);
      if (it == external_rows.end()) {
        if (policy == io::MissingPolicy::kError) throw DataError("no descriptor row for '" + c.canonical_smiles + "'");
        if (report) report->missing_descriptors.push_back(c.canonical_smiles);
        continue;
      }
      descriptors = external->rows[it->second];
    } else {
      descriptors = desc::compute_descriptors(mol).values;
    }
    ds.keys.push_back(c.canonical_smiles);
    ds.pic50.push_back(c.pic50);
    ds.descriptors.push_back(std::move(descriptors));
    if (emb) ds.embeddings.emplace_back(emb->begin(), emb->end());
    ds.graphs.push_back(graph::build_graph(mol));
  }
  return ds;
}

std::size_t select_best_epoch(const TrainHistory& history) {
  if (history.empty()) throw DataError("empty training history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].val_mse < history[best].val_mse) best = i;
  }
  return best;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order, std::size_t batch_size) {
  if (batch_size == 0) throw DataError("batch size must be positive");
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    if (end - i == 1 && !batches.empty()) {
      batches.back().push_back(order[i]);
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

namespace {

desc::Rows gather(const desc::Rows& rows, std::span<const std::size_t> idx) {
  desc::Rows out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<std::size_t> all_columns(std::size_t n) {
  std::vector<std::size_t> c(n);
  std::iota(c.begin(), c.end(), std::size_t{0});
  return c;
}

ModelShape shape_for(const FusionConfig& c) {
  ModelShape s;
  s.use_descriptors = c.use_descriptors;
  s.use_embeddings = c.use_embeddings;
  s.use_graph = c.use_graph;
  s.gcn_hidden = c.gcn_hidden;
  s.gcn_dropout = c.gcn_dropout;
  s.fc1 = c.fc1;
  s.fc2 = c.fc2;
  s.dropout = c.dropout;
  return s;
}

std::vector<double> forward_eval(FusionModel<float>& net, const std::vector<ModalityInputs>& inputs) {
  constexpr std::size_t kChunk = 64;
  nn::Rng unused(0);
  std::vector<double> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); i += kChunk) {
    const std::size_t end = std::min(inputs.size(), i + kChunk);
    const auto part = net.forward(std::span(inputs).subspan(i, end - i), Mode::kEval, unused, nullptr);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace

ModalityInputs prepare_inputs(const TrainedModel& model, std::span<const double> raw_descriptors,
                              std::span<const double> raw_embedding, const graph::MolecularGraph* graph) {
  ModalityInputs in;
  const ModelShape& s = model.net.shape;
  if (s.use_descriptors) {
    if (raw_descriptors.size() != model.descriptor_names.size()) {
      throw ShapeError("width mismatch: " + std::to_string(raw_descriptors.size()) + " raw descriptors, model expects " +
                       std::to_string(model.descriptor_names.size()));
    }
    in.descriptors = desc::normalize_row({raw_descriptors.begin(), raw_descriptors.end()}, model.descriptor_stats);
  }
  if (s.use_embeddings) {
    if (raw_embedding.size() != model.raw_embedding_width) {
      throw ShapeError("width mismatch: embedding has " + std::to_string(raw_embedding.size()) +
                       " entries, model expects " + std::to_string(model.raw_embedding_width));
    }
    in.embedding = desc::normalize_row({raw_embedding.begin(), raw_embedding.end()}, model.embedding_stats);
  }
  if (s.use_graph) in.graph = graph;
  return in;
}

ModalityInputs prepare_inputs(const TrainedModel& model, const Dataset& data, std::size_t index) {
  const bool emb = model.net.shape.use_embeddings;
  if (emb && data.embeddings.size() != data.size()) throw DataError("embedding modality enabled but no embeddings loaded");
  return prepare_inputs(model, data.descriptors[index],
                        emb ? std::span<const double>(data.embeddings[index]) : std::span<const double>(),
                        &data.graphs[index]);
}

TrainResult train_fold(const Dataset& data, const data::FoldSplit& split, const FusionConfig& config) {
  config.validate();
  if (split.train.size() < 2 || split.val.empty()) throw DataError("train_fold: empty train or validation split");
  if (config.use_embeddings && data.embeddings.size() != data.size()) {
    throw DataError("embedding modality enabled but no embeddings loaded");
  }

  TrainResult result;
  TrainedModel& m = result.model;
  m.config = config;
  m.fold_index = split.fold_index;
  m.descriptor_schema = data.descriptor_schema;
  m.descriptor_names = data.descriptor_names;
  m.raw_embedding_width = data.embeddings.empty() ? 0 : data.embeddings.front().size();

  ModelShape shape = shape_for(config);
  if (config.use_descriptors) {
    m.descriptor_stats = desc::fit_pipeline(gather(data.descriptors, split.train), config.variance_threshold,
                                            config.correlation_threshold);
    if (m.descriptor_stats.retained.empty()) throw DataError("no descriptor column survives filtering");
    shape.descriptor_width = m.descriptor_stats.retained.size();
  }
  if (config.use_embeddings) {
    m.embedding_stats = desc::fit_stats(gather(data.embeddings, split.train), all_columns(m.raw_embedding_width));
    shape.embedding_width = m.raw_embedding_width;
  }
  std::vector<double> train_targets;
  for (std::size_t i : split.train) train_targets.push_back(data.pic50[i]);
  m.scaler = data::TargetScaler::fit(train_targets);

  m.net = FusionModel<float>(shape);
  nn::Rng rng(nn::derive_seed(config.seed, static_cast<std::uint64_t>(split.fold_index)));
  m.net.init(rng);
  if (!config.pretrained_gcn.empty() && config.use_graph) load_pretrained_gcn(m.net, config.pretrained_gcn);

  std::vector<ModalityInputs> inputs(data.size());
  std::vector<double> z(data.size());
  for (auto idx : {std::span<const std::size_t>(split.train), std::span<const std::size_t>(split.val)}) {
    for (std::size_t i : idx) {
      inputs[i] = prepare_inputs(m, data, i);
      z[i] = m.scaler.apply(data.pic50[i]);
    }
  }
  std::vector<ModalityInputs> val_inputs;
  std::vector<double> val_targets;
  for (std::size_t i : split.val) {
    val_inputs.push_back(inputs[i]);
    val_targets.push_back(z[i]);
  }

  nn::AdamConfig adam;
  adam.weight_decay = config.weight_decay;
  adam.decoupled = config.decoupled_weight_decay;

  FusionModel<float> best = m.net;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(split.train.begin(), split.train.end());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = nn::cosine_lr(epoch - 1, config.lr, config.epochs, config.lr_min);
    nn::shuffle(order, rng);
    double loss_sum = 0.0;
    for (const auto& batch : make_batches(order, config.batch_size)) {
      std::vector<ModalityInputs> batch_inputs;
      std::vector<double> targets;
      for (std::size_t i : batch) {
        batch_inputs.push_back(inputs[i]);
        targets.push_back(z[i]);
      }
      m.net.zero_grad();
      FusionTape<float> tape;
      const auto pred = m.net.forward(batch_inputs, Mode::kTrain, rng, &tape);
      const nn::LossResult loss = nn::mse_loss(pred, targets);
      m.net.backward(batch_inputs, tape, loss.grad);
      nn::adam_step(m.net.params(), lr, adam);
      loss_sum += loss.loss * static_cast<double>(batch.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_mse = metrics::mse(val_targets, forward_eval(m.net, val_inputs));
    result.history.push_back(rec);
    if (rec.val_mse < best_val) {
      best_val = rec.val_mse;
      best = m.net;
      m.best_epoch = epoch;
    }
  }
  m.net = std::move(best);
  return result;
}

std::vector<double> predict(const TrainedModel& model, const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<ModalityInputs> inputs;
  inputs.reserve(indices.size());
  for (std::size_t i : indices) inputs.push_back(prepare_inputs(model, data, i));
  FusionModel<float> net = model.net;  // eval forward leaves parameters untouched; copy keeps `model` const
  return forward_eval(net, inputs);
}

namespace {

Evaluation make_evaluation(const data::TargetScaler& scaler, const Dataset& data, std::span<const std::size_t> indices,
                           const std::vector<double>& predicted_std) {
  Evaluation ev;
  std::vector<double> y, y_nat, p_nat;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t i = indices[j];
    Prediction p;
    p.key = data.keys[i];
    p.target_pic50 = data.pic50[i];
    p.target_std = scaler.apply(p.target_pic50);
    p.predicted_std = predicted_std[j];
    p.predicted_pic50 = scaler.invert(p.predicted_std);
    y.push_back(p.target_std);
    y_nat.push_back(p.target_pic50);
    p_nat.push_back(p.predicted_pic50);
    ev.predictions.push_back(std::move(p));
  }
  ev.report = metrics::evaluate(y, predicted_std);
  ev.mae_pic50 = metrics::mae(y_nat, p_nat);
  ev.rmse_pic50 = metrics::rmse(y_nat, p_nat);
  return ev;
}

}  // namespace

Evaluation evaluate(const TrainedModel& model, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("evaluate: no compounds");
  return make_evaluation(model.scaler, data, indices, predict(model, data, indices));
}

std::vector<double> knn_predict(const desc::Rows& train, std::span<const double> targets, const desc::Rows& queries,
                                std::size_t k) {
  if (train.size() != targets.size()) throw DataError("knn: row and target counts differ");
  if (k == 0 || k > train.size()) {
    throw DataError("knn: k = " + std::to_string(k) + " but the training set has " + std::to_string(train.size()) +
                    " rows");
  }
  std::vector<double> out;
  std::vector<std::pair<double, std::size_t>> dist(train.size());
  for (const auto& q : queries) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].size() != q.size()) throw ShapeError("knn: width mismatch");
      double d = 0.0;
      for (std::size_t c = 0; c < q.size(); ++c) d += (train[i][c] - q[c]) * (train[i][c] - q[c]);
      dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += targets[dist[j].second];
    out.push_back(s / static_cast<double>(k));
  }
  return out;
}

Evaluation knn_baseline(const Dataset& data, const data::FoldSplit& split, std::size_t k, double variance_threshold,
                        double correlation_threshold) {
  if (split.train.empty() || split.test.empty()) throw DataError("knn_baseline: empty split");
  const desc::Rows train_raw = gather(data.descriptors, split.train);
  const desc::FeatureStats stats = desc::fit_pipeline(train_raw, variance_threshold, correlation_threshold);
  std::vector<double> train_pic50;
  for (std::size_t i : split.train) train_pic50.push_back(data.pic50[i]);
  const data::TargetScaler scaler = data::TargetScaler::fit(train_pic50);
  std::vector<double> targets;
  for (double y : train_pic50) targets.push_back(scaler.apply(y));
  const auto pred = knn_predict(desc::normalize(train_raw, stats), targets,
                                desc::normalize(gather(data.descriptors, split.test), stats), k);
  return make_evaluation(scaler, data, split.test, pred);
}

std::vector<FusionConfig> ablation_grid(const FusionConfig& base) {
  constexpr bool kRows[7][3] = {{true, false, false}, {false, true, false}, {false, false, true}, {true, true, false},
                                {false, true, true},  {true, false, true},  {true, true, true}};
  std::vector<FusionConfig> grid;
  for (const auto& r : kRows) {
    FusionConfig c = base;
    c.use_descriptors = r[0];
    c.use_embeddings = r[1];
    c.use_graph = r[2];
    grid.push_back(c);
  }
  return grid;
}

std::vector<std::pair<std::size_t, std::size_t>> ablation_order_disagreements(const std::vector<AblationRow>& rows) {
  if (rows.size() != kReferenceAblationMse.size()) throw DataError("ablation table must have 7 rows");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double ref = kReferenceAblationMse[i] - kReferenceAblationMse[j];
      if (ref == 0.0) continue;
      const double ours = rows[i].aggregate.mse.mean - rows[j].aggregate.mse.mean;
      if (!((ref < 0.0 && ours < 0.0) || (ref > 0.0 && ours > 0.0))) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<AblationRow> ablate(const Dataset& data, const std::vector<data::FoldSplit>& splits,
                                const FusionConfig& base, int jobs) {
  const auto grid = ablation_grid(base);
  std::vector<AblationRow> rows(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    rows[r].label = grid[r].modality_label();
    rows[r].use_descriptors = grid[r].use_descriptors;
    rows[r].use_embeddings = grid[r].use_embeddings;
    rows[r].use_graph = grid[r].use_graph;
    rows[r].folds.resize(splits.size());
  }
  const std::size_t nf = splits.size();
  util::parallel_for(grid.size() * nf, jobs, [&](std::size_t job) {
    const std::size_t r = job / nf, f = job % nf;
    const TrainResult tr = train_fold(data, splits[f], grid[r]);
    rows[r].folds[f] = evaluate(tr.model, data, splits[f].test).report;
  });
  for (AblationRow& row : rows) row.aggregate = metrics::aggregate_folds(row.folds);
  return rows;
}

void check_compatible(const TrainedModel& model, const FusionConfig& config) {
  const ModelShape& s = model.net.shape;
  if (s.use_descriptors != config.use_descriptors || s.use_embeddings != config.use_embeddings ||
      s.use_graph != config.use_graph || (config.use_graph && s.gcn_hidden != config.gcn_hidden) ||
      s.fc1 != config.fc1 || s.fc2 != config.fc2) {
    throw ShapeError("width mismatch: checkpoint holds a " + model.config.modality_label() + " model (input width " +
                     std::to_string(s.input_width()) + "), config requests " + config.modality_label());
  }
}

}  // namespace rep3net::model
