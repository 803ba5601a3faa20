#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rep3net/data/dataset.hpp"
#include "rep3net/descriptors/filters.hpp"
#include "rep3net/io/embeddings.hpp"
#include "rep3net/metrics/metrics.hpp"
#include "rep3net/model/fusion.hpp"

namespace rep3net::model {

struct FusionConfig {
  bool use_descriptors = true;
  bool use_embeddings = true;
  bool use_graph = true;
  std::size_t gcn_hidden = 128;
  double gcn_dropout = 0.1;
  std::size_t fc1 = 512;
  std::size_t fc2 = 128;
  double dropout = 0.2;
  std::size_t batch_size = 4;
  double lr = 5e-5;
  double lr_min = 0.0;
  double weight_decay = 1e-5;
  bool decoupled_weight_decay = false;
  int epochs = 20;
  std::uint64_t seed = 42;
  double variance_threshold = 0.01;
  double correlation_threshold = 0.9;
  std::string pretrained_gcn;  // optional checkpoint whose gcn.* arrays seed the graph block

  /// Throws DataError naming the first invalid field.
  void validate() const;
  std::string modality_label() const;  // e.g. "descriptors+graph"
  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// JSON object text with every FusionConfig field, as stored in checkpoints.
std::string config_to_json(const FusionConfig& config);

/// Raw per-compound modalities for a whole curated dataset. Descriptor and
/// embedding rows are unnormalized; statistics are fitted per fold.
struct Dataset {
  std::vector<std::string> keys;  // canonical SMILES
  std::vector<double> pic50;
  std::string descriptor_schema;
  std::vector<std::string> descriptor_names;
  desc::Rows descriptors;
  desc::Rows embeddings;  // empty when no store was supplied
  std::vector<graph::MolecularGraph> graphs;

  std::size_t size() const { return keys.size(); }
};

struct DatasetReport {
  std::vector<std::string> missing_embeddings;   // dropped under MissingPolicy::kDrop
  std::vector<std::string> missing_descriptors;  // external table only
};

/// Featurizes curated compounds. Native descriptors are computed unless an
/// external table (keys canonicalized on load) is given.
Dataset build_dataset(const std::vector<data::CuratedCompound>& compounds, const io::EmbeddingStore* store,
                      io::MissingPolicy policy = io::MissingPolicy::kError,
                      const desc::DescriptorTable* external_descriptors = nullptr, DatasetReport* report = nullptr);

/// Everything needed to reproduce predictions: parameters plus the
/// per-modality statistics and target scaler fitted on the training split.
struct TrainedModel {
  FusionConfig config;
  FusionModel<float> net;
  std::string descriptor_schema;
  std::vector<std::string> descriptor_names;  // raw columns before filtering
  std::size_t raw_embedding_width = 0;
  desc::FeatureStats descriptor_stats;
  desc::FeatureStats embedding_stats;
  data::TargetScaler scaler;
  int best_epoch = 0;  // 1-based
  int fold_index = -1;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

using TrainHistory = std::vector<EpochRecord>;

/// Index of the smallest val_mse; ties go to the earliest epoch.
std::size_t select_best_epoch(const TrainHistory& history);

/// Splits a shuffled order into batches of batch_size; a final partial batch
/// of one sample joins the previous batch.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order, std::size_t batch_size);

struct TrainResult {
  TrainedModel model;
  TrainHistory history;
};

/// Trains one fold: statistics and scaler fitted on split.train, per-epoch
/// shuffling from a stream derived from (seed, fold), parameters restored
/// from the epoch with the lowest validation MSE.
TrainResult train_fold(const Dataset& data, const data::FoldSplit& split, const FusionConfig& config);

/// Applies a model's statistics to one compound of a dataset.
ModalityInputs prepare_inputs(const TrainedModel& model, const Dataset& data, std::size_t index);
ModalityInputs prepare_inputs(const TrainedModel& model, std::span<const double> raw_descriptors,
                              std::span<const double> raw_embedding, const graph::MolecularGraph* graph);

/// Eval-mode predictions on the standardized scale.
std::vector<double> predict(const TrainedModel& model, const Dataset& data, std::span<const std::size_t> indices);

struct Prediction {
  std::string key;
  double target_std = 0.0;
  double predicted_std = 0.0;
  double target_pic50 = 0.0;
  double predicted_pic50 = 0.0;
};

struct Evaluation {
  metrics::MetricsReport report;   // standardized scale
  double mae_pic50 = 0.0;          // natural units via the scaler
  double rmse_pic50 = 0.0;
  std::vector<Prediction> predictions;
};

Evaluation evaluate(const TrainedModel& model, const Dataset& data, std::span<const std::size_t> indices);

/// Plain k-NN regression: Euclidean distance, mean of the k nearest
/// targets, ties in distance broken by lower training index.
std::vector<double> knn_predict(const desc::Rows& train, std::span<const double> targets, const desc::Rows& queries,
                                std::size_t k);

/// k-NN on filtered, normalized descriptors with standardized targets.
/// Throws DataError when k exceeds the training size.
Evaluation knn_baseline(const Dataset& data, const data::FoldSplit& split, std::size_t k = 5,
                        double variance_threshold = 0.01, double correlation_threshold = 0.9);

struct AblationRow {
  std::string label;
  bool use_descriptors = false, use_embeddings = false, use_graph = false;
  std::vector<metrics::MetricsReport> folds;
  metrics::FoldAggregate aggregate;
};

/// The seven non-empty modality subsets, singles first, then pairs, then
/// all three.
std::vector<FusionConfig> ablation_grid(const FusionConfig& base);

/// Reference MSE and Spearman per grid row from the published ablation.
inline constexpr std::array<double, 7> kReferenceAblationMse = {1.06, 0.94, 0.90, 0.91, 0.89, 0.89, 0.84};
inline constexpr std::array<double, 7> kReferenceAblationSpearman = {0.58, 0.63, 0.66, 0.65, 0.66, 0.67, 0.68};

/// Pairs of rows whose MSE order disagrees with the reference order (rows
/// tied in the reference are not compared).
std::vector<std::pair<std::size_t, std::size_t>> ablation_order_disagreements(const std::vector<AblationRow>& rows);

/// Trains every grid row on the same splits and seeds.
std::vector<AblationRow> ablate(const Dataset& data, const std::vector<data::FoldSplit>& splits,
                                const FusionConfig& base, int jobs = 1);

// Checkpoint container "R3CKPT": magic, u32 version, u32 manifest length,
// manifest JSON, float32 little-endian arrays in manifest order, u32 CRC-32
// of every preceding byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> encode_checkpoint(const TrainedModel& model);
/// Throws FormatError: "bad magic", "truncated file", "version mismatch",
/// "checksum mismatch", "corrupt manifest".
TrainedModel decode_checkpoint(const char* data, std::size_t size, const std::string& what = "checkpoint");
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

/// Throws ShapeError ("width mismatch") when the model's modalities or
/// layer widths differ from what `config` would build.
void check_compatible(const TrainedModel& model, const FusionConfig& config);

/// Copies gcn.* arrays from an external checkpoint into `net`; shapes must
/// match exactly.
void load_pretrained_gcn(FusionModel<float>& net, const std::filesystem::path& path);

}  // namespace rep3net::model
