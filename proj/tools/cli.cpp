#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "rep3net/chem/smiles.hpp"
#include "rep3net/data/dataset.hpp"
#include "rep3net/descriptors/descriptors.hpp"
#include "rep3net/error.hpp"
#include "rep3net/graph/molgraph.hpp"
#include "rep3net/io/csv.hpp"
#include "rep3net/io/embeddings.hpp"
#include "rep3net/metrics/metrics.hpp"
#include "rep3net/model/trainer.hpp"
#include "rep3net/util/parallel.hpp"

namespace rep3net::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string input;
  std::string embeddings;
  std::string descriptors_csv;
  std::string checkpoint;
  std::string predictions;
  std::string out = "rep3net_out";
  std::string missing_embeddings = "error";
  std::string modalities = "all";
  std::string interval = "t";
  double confidence = 0.95;
  int folds = 5;
  int jobs = 1;
  std::size_t knn_k = 5;
  std::size_t reps = 1000;
  data::FilterOptions filter;
  model::FusionConfig fusion;
  std::vector<std::string> positional;
};

// Everything a report needs to identify the run that produced it.
struct Run {
  Options opt;
  json config;
  std::string hash;
};

constexpr std::size_t kMinBenchReps = 1000;

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream s;
  s << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) s << std::setw(2) << static_cast<int>(md[i]);
  return s.str();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json file_identity(const std::string& path) {
  if (path.empty()) return nullptr;
  return {{"name", fs::path(path).filename().string()}, {"sha256", sha256_hex(read_bytes(path))}};
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::ostringstream s;
  io::write_csv_row(s, fields);
  return s.str();
}

std::string num(double v) { return io::format_double(v); }

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string s;
  for (const auto& i : items) {
    if (!s.empty()) s += sep;
    s += i;
  }
  return s;
}

void apply_modalities(Options& o) {
  auto& f = o.fusion;
  std::string spec = o.modalities;
  std::replace(spec.begin(), spec.end(), '+', ',');
  if (spec == "all") {
    f.use_descriptors = f.use_embeddings = f.use_graph = true;
    return;
  }
  f.use_descriptors = f.use_embeddings = f.use_graph = false;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "descriptors" || item == "desc") {
      f.use_descriptors = true;
    } else if (item == "embeddings" || item == "emb") {
      f.use_embeddings = true;
    } else if (item == "graph") {
      f.use_graph = true;
    } else {
      throw UsageError("unknown modality '" + item + "' (expected descriptors, embeddings, graph or all)");
    }
  }
}

metrics::IntervalMode interval_mode(const Options& o) {
  if (o.interval == "t") return metrics::IntervalMode::kStudentT;
  if (o.interval == "normal") return metrics::IntervalMode::kNormal;
  throw UsageError("--interval must be 't' or 'normal'");
}

io::MissingPolicy missing_policy(const Options& o) {
  if (o.missing_embeddings == "error") return io::MissingPolicy::kError;
  if (o.missing_embeddings == "drop") return io::MissingPolicy::kDrop;
  throw UsageError("--missing-embeddings must be 'error' or 'drop'");
}

Run make_run(const Options& o) {
  Run r;
  r.opt = o;
  const auto& c = o.filter.columns;
  r.config = {
      {"command", o.command},
      {"fusion", json::parse(model::config_to_json(o.fusion))},
      {"filter",
       {{"columns",
         {{"id", c.id}, {"smiles", c.smiles}, {"relation", c.relation}, {"value", c.value}, {"units", c.units}}},
        {"accepted_relations", o.filter.accepted_relations},
        {"units", o.filter.units}}},
      {"folds", o.folds},
      {"missing_embeddings", o.missing_embeddings},
      {"knn_k", o.knn_k},
      {"confidence", o.confidence},
      {"interval", o.interval},
      {"inputs",
       {{"activities", file_identity(o.input)},
        {"embeddings", file_identity(o.embeddings)},
        {"descriptors_csv", file_identity(o.descriptors_csv)},
        {"checkpoint", file_identity(o.checkpoint)},
        {"predictions", file_identity(o.predictions)}}},
  };
  if (o.command == "bench") r.config["reps"] = o.reps;
  r.hash = sha256_hex(r.config.dump()).substr(0, 16);
  return r;
}

// ---------------------------------------------------------------------------
// Shared pipeline steps

struct Curated {
  data::LoadResult loaded;
  std::vector<data::CuratedCompound> compounds;
};

Curated curate_input(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  Curated c;
  c.loaded = data::load_and_filter(o.input, o.filter);
  c.compounds = data::aggregate_duplicates(c.loaded.records);
  if (c.compounds.empty()) throw DataError("no compounds survive curation");
  return c;
}

void write_curation(const fs::path& dir, const Curated& c, const Run& run) {
  std::ostringstream csv;
  data::write_curated_csv(csv, c.compounds);
  write_text(dir / "curated.csv", csv.str());
  json report = {{"rows_read", c.loaded.rows_read},
                 {"records_kept", c.loaded.records.size()},
                 {"compounds", c.compounds.size()},
                 {"duplicate_records_merged", c.loaded.records.size() - c.compounds.size()},
                 {"dropped", c.loaded.dropped},
                 {"warnings", c.loaded.warnings},
                 {"curated_input", c.loaded.curated_input},
                 {"config_hash", run.hash},
                 {"prng_id", nn::kPrngId}};
  write_text(dir / "curation_report.json", report.dump(2) + "\n");
}

std::optional<io::EmbeddingStore> load_store(const Options& o, bool required) {
  if (o.embeddings.empty()) {
    if (required) throw UsageError("the embedding modality is enabled: --embeddings is required");
    return std::nullopt;
  }
  return io::read_store(o.embeddings);
}

model::Dataset load_dataset(const Options& o, const std::vector<data::CuratedCompound>& compounds,
                            bool need_embeddings, model::DatasetReport* report) {
  const auto store = load_store(o, need_embeddings);
  std::optional<desc::DescriptorTable> external;
  if (!o.descriptors_csv.empty()) external = desc::read_descriptor_csv(o.descriptors_csv);
  return model::build_dataset(compounds, store ? &*store : nullptr, missing_policy(o),
                              external ? &*external : nullptr, report);
}

// ---------------------------------------------------------------------------
// Report writers

const std::vector<std::string> kReportHeader = {
    "fold", "split", "model", "n", "mse", "rmse", "mae", "r2", "pearson", "spearman",
    "mae_pic50", "rmse_pic50", "best_epoch", "flags", "config_hash", "prng_id"};

std::vector<std::string> report_row(const std::string& fold, const std::string& split, const std::string& model,
                                    const metrics::MetricsReport& r, double mae_pic50, double rmse_pic50,
                                    const std::string& best_epoch, const Run& run) {
  return {fold,          split,         model,        std::to_string(r.n), num(r.mse),
          num(r.rmse),   num(r.mae),    num(r.r2),    num(r.pearson),      num(r.spearman),
          num(mae_pic50), num(rmse_pic50), best_epoch, join(r.flags, ";"), run.hash,
          std::string(nn::kPrngId)};
}

std::string predictions_csv(const std::vector<model::Prediction>& preds, const Run& run) {
  std::string s = csv_line({"key", "target_std", "predicted_std", "target_pic50", "predicted_pic50", "config_hash",
                            "prng_id"});
  for (const auto& p : preds) {
    s += csv_line({p.key, num(p.target_std), num(p.predicted_std), num(p.target_pic50), num(p.predicted_pic50),
                   run.hash, std::string(nn::kPrngId)});
  }
  return s;
}

std::string history_csv(const model::TrainHistory& h, const Run& run) {
  std::string s = csv_line({"epoch", "train_loss", "val_mse", "lr", "config_hash", "prng_id"});
  for (const auto& e : h) {
    s += csv_line({std::to_string(e.epoch), num(e.train_loss), num(e.val_mse), num(e.lr), run.hash,
                   std::string(nn::kPrngId)});
  }
  return s;
}

const char* kMetricNames[] = {"mse", "rmse", "mae", "r2", "pearson", "spearman"};

std::vector<const metrics::Summary*> summaries(const metrics::FoldAggregate& a) {
  return {&a.mse, &a.rmse, &a.mae, &a.r2, &a.pearson, &a.spearman};
}

std::vector<std::string> aggregate_header() {
  std::vector<std::string> h = {"model", "k"};
  for (const char* m : kMetricNames) {
    h.push_back(std::string(m) + "_mean");
    h.push_back(std::string(m) + "_ci");
  }
  for (const char* c : {"confidence", "interval", "flags", "config_hash", "prng_id"}) h.push_back(c);
  return h;
}

std::vector<std::string> aggregate_row(const std::string& label, const metrics::FoldAggregate& a, const Run& run) {
  std::vector<std::string> row = {label, std::to_string(a.k)};
  for (const auto* s : summaries(a)) {
    row.push_back(num(s->mean));
    row.push_back(num(s->ci_half_width));
  }
  row.push_back(num(run.opt.confidence));
  row.push_back(run.opt.interval);
  row.push_back(join(a.flags, ";"));
  row.push_back(run.hash);
  row.push_back(std::string(nn::kPrngId));
  return row;
}

std::string fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "undef";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_aggregate_table(std::ostream& out, const std::vector<std::pair<std::string, metrics::FoldAggregate>>& rows) {
  out << std::left << std::setw(32) << "model";
  for (const char* m : kMetricNames) out << std::setw(18) << m;
  out << "\n";
  for (const auto& [label, a] : rows) {
    out << std::setw(32) << label;
    for (const auto* s : summaries(a)) out << std::setw(18) << (fixed(s->mean) + " +/- " + fixed(s->ci_half_width));
    out << "\n";
  }
}

json run_json(const Run& run, const json& extra) {
  json j = {{"tool", "rep3net"},
            {"config", run.config},
            {"config_hash", run.hash},
            {"prng_id", nn::kPrngId},
            {"deterministic", true}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_curate(const Run& run, std::ostream& out) {
  const Curated c = curate_input(run.opt);
  const fs::path dir = fs::path(run.opt.out) / "curated";
  write_curation(dir, c, run);
  out << "curated " << c.compounds.size() << " compounds from " << c.loaded.rows_read << " rows -> "
      << (dir / "curated.csv").string() << "\n";
  for (const auto& [reason, count] : c.loaded.dropped) out << "  dropped " << reason << ": " << count << "\n";
  return kExitOk;
}

struct FoldOutcome {
  metrics::MetricsReport fusion;
  metrics::MetricsReport knn;
};

int cmd_train(const Run& run, std::ostream& out) {
  const Options& o = run.opt;
  const Curated c = curate_input(o);
  model::DatasetReport drep;
  const model::Dataset ds = load_dataset(o, c.compounds, o.fusion.use_embeddings, &drep);
  const fs::path root(o.out);
  write_curation(root / "curated", c, run);
  const auto splits = data::make_cv_splits(ds.size(), o.fusion.seed, o.folds);
  const std::string label = o.fusion.modality_label();
  const std::string knn_label = "knn_k" + std::to_string(o.knn_k);

  std::vector<FoldOutcome> outcomes(splits.size());
  util::parallel_for(splits.size(), o.jobs, [&](std::size_t f) {
    const auto& split = splits[f];
    const model::TrainResult tr = model::train_fold(ds, split, o.fusion);
    const model::Evaluation test = model::evaluate(tr.model, ds, split.test);
    const model::Evaluation val = model::evaluate(tr.model, ds, split.val);
    const model::Evaluation knn =
        model::knn_baseline(ds, split, o.knn_k, o.fusion.variance_threshold, o.fusion.correlation_threshold);
    const fs::path dir = root / "folds" / ("fold_" + std::to_string(f));
    fs::create_directories(dir);
    model::save_checkpoint(tr.model, dir / "checkpoint.r3ckpt");
    write_text(dir / "history.csv", history_csv(tr.history, run));
    const std::string fold = std::to_string(f), best = std::to_string(tr.model.best_epoch);
    std::string report = csv_line(kReportHeader);
    report += csv_line(report_row(fold, "test", label, test.report, test.mae_pic50, test.rmse_pic50, best, run));
    report += csv_line(report_row(fold, "val", label, val.report, val.mae_pic50, val.rmse_pic50, best, run));
    report += csv_line(report_row(fold, "test", knn_label, knn.report, knn.mae_pic50, knn.rmse_pic50, "", run));
    write_text(dir / "report.csv", report);
    write_text(dir / "predictions.csv", predictions_csv(test.predictions, run));
    outcomes[f] = {test.report, knn.report};
  });

  std::vector<metrics::MetricsReport> fusion, knn;
  for (const auto& oc : outcomes) {
    fusion.push_back(oc.fusion);
    knn.push_back(oc.knn);
  }
  const auto mode = interval_mode(o);
  const std::vector<std::pair<std::string, metrics::FoldAggregate>> rows = {
      {label, metrics::aggregate_folds(fusion, o.confidence, mode)},
      {knn_label, metrics::aggregate_folds(knn, o.confidence, mode)}};
  std::string agg = csv_line(aggregate_header());
  for (const auto& [l, a] : rows) agg += csv_line(aggregate_row(l, a, run));
  write_text(root / "aggregate.csv", agg);
  write_text(root / "run.json", run_json(run, {{"compounds", ds.size()},
                                               {"missing_embeddings", drep.missing_embeddings},
                                               {"missing_descriptors", drep.missing_descriptors}})
                                        .dump(2) +
                                    "\n");
  out << "trained " << splits.size() << " folds on " << ds.size() << " compounds (" << label << ")\n";
  print_aggregate_table(out, rows);
  return kExitOk;
}

int cmd_ablate(const Run& run, std::ostream& out) {
  const Options& o = run.opt;
  model::FusionConfig base = o.fusion;
  base.use_descriptors = base.use_embeddings = base.use_graph = true;
  const Curated c = curate_input(o);
  const model::Dataset ds = load_dataset(o, c.compounds, true, nullptr);
  const fs::path root(o.out);
  write_curation(root / "curated", c, run);
  const auto splits = data::make_cv_splits(ds.size(), base.seed, o.folds);
  auto rows = model::ablate(ds, splits, base, o.jobs);
  const auto mode = interval_mode(o);
  for (auto& r : rows) r.aggregate = metrics::aggregate_folds(r.folds, o.confidence, mode);

  std::vector<std::string> header = {"row", "label", "use_descriptors", "use_embeddings", "use_graph"};
  for (const char* m : kMetricNames) {
    header.push_back(std::string(m) + "_mean");
    header.push_back(std::string(m) + "_ci");
  }
  for (std::size_t f = 0; f < splits.size(); ++f) header.push_back("fold" + std::to_string(f) + "_mse");
  for (const char* h : {"reference_mse", "reference_spearman", "flags", "config_hash", "prng_id"}) header.push_back(h);
  std::string table = csv_line(header);
  std::vector<std::pair<std::string, metrics::FoldAggregate>> printed;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::vector<std::string> line = {std::to_string(i), r.label, r.use_descriptors ? "1" : "0",
                                     r.use_embeddings ? "1" : "0", r.use_graph ? "1" : "0"};
    for (const auto* s : summaries(r.aggregate)) {
      line.push_back(num(s->mean));
      line.push_back(num(s->ci_half_width));
    }
    for (const auto& f : r.folds) line.push_back(num(f.mse));
    line.push_back(num(model::kReferenceAblationMse[i]));
    line.push_back(num(model::kReferenceAblationSpearman[i]));
    line.push_back(join(r.aggregate.flags, ";"));
    line.push_back(run.hash);
    line.push_back(std::string(nn::kPrngId));
    table += csv_line(line);
    printed.emplace_back(r.label, r.aggregate);
  }
  write_text(root / "ablation.csv", table);

  // Folds where full fusion is at least as good as every single modality.
  std::size_t fusion_best = 0;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const double single = std::min({rows[0].folds[f].mse, rows[1].folds[f].mse, rows[2].folds[f].mse});
    fusion_best += rows[6].folds[f].mse <= single;
  }
  json disagreements = json::array();
  for (auto [a, b] : model::ablation_order_disagreements(rows)) {
    disagreements.push_back({{"better_in_reference", rows[a].label}, {"better_here", rows[b].label}});
  }
  write_text(root / "run.json", run_json(run, {{"compounds", ds.size()},
                                               {"full_fusion_best_folds", fusion_best},
                                               {"folds", splits.size()},
                                               {"reference_order_disagreements", disagreements}})
                                        .dump(2) +
                                    "\n");
  print_aggregate_table(out, printed);
  out << "full fusion <= every single modality in " << fusion_best << " of " << splits.size() << " folds\n";
  out << "ordering disagreements with the reference grid: " << disagreements.size() << "\n";
  for (const auto& d : disagreements) {
    out << "  " << d["better_in_reference"].get<std::string>() << " beat " << d["better_here"].get<std::string>()
        << " in the reference, not here\n";
  }
  return kExitOk;
}

metrics::MetricsReport report_from_predictions(const std::string& path, double* mae_pic50, double* rmse_pic50) {
  const auto rows = io::read_csv(path);
  if (rows.size() < 2) throw DataError(path + ": no predictions");
  auto col = [&](const char* name) {
    const auto idx = io::column_index(rows[0], name);
    if (!idx) throw DataError(path + ": missing required column '" + std::string(name) + "'");
    return *idx;
  };
  const std::size_t ts = col("target_std"), ps = col("predicted_std"), tp = col("target_pic50"),
                    pp = col("predicted_pic50");
  std::vector<double> y, p, yn, pn;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto value = [&](std::size_t c) {
      const auto v = c < rows[i].size() ? io::parse_double(rows[i][c]) : std::nullopt;
      if (!v) throw DataError(path + ": bad number on line " + std::to_string(i + 1));
      return *v;
    };
    y.push_back(value(ts));
    p.push_back(value(ps));
    yn.push_back(value(tp));
    pn.push_back(value(pp));
  }
  *mae_pic50 = metrics::mae(yn, pn);
  *rmse_pic50 = metrics::rmse(yn, pn);
  return metrics::evaluate(y, p);
}

int cmd_evaluate(const Run& run, std::ostream& out) {
  const Options& o = run.opt;
  std::string report = csv_line(kReportHeader);
  if (!o.predictions.empty()) {
    double mae_n = 0, rmse_n = 0;
    const auto r = report_from_predictions(o.predictions, &mae_n, &rmse_n);
    report += csv_line(report_row("", "recomputed", "predictions", r, mae_n, rmse_n, "", run));
    out << report;
    return kExitOk;
  }
  if (o.checkpoint.empty()) throw UsageError("evaluate needs --checkpoint (with --input) or --predictions");
  const model::TrainedModel m = model::load_checkpoint(o.checkpoint);
  const Curated c = curate_input(o);
  const model::Dataset ds = load_dataset(o, c.compounds, m.config.use_embeddings, nullptr);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto ev = model::evaluate(m, ds, all);
  report += csv_line(report_row(std::to_string(m.fold_index), "all", m.config.modality_label(), ev.report,
                                ev.mae_pic50, ev.rmse_pic50, std::to_string(m.best_epoch), run));
  const fs::path dir = fs::path(o.out) / "evaluation";
  write_text(dir / "report.csv", report);
  write_text(dir / "predictions.csv", predictions_csv(ev.predictions, run));
  out << report;
  return kExitOk;
}

std::vector<data::CuratedCompound> compounds_from_smiles(const std::vector<std::string>& smiles) {
  std::vector<data::CuratedCompound> out;
  for (const auto& s : smiles) {
    data::CuratedCompound c;
    c.canonical_smiles = chem::canonicalize(s);
    out.push_back(c);
  }
  return out;
}

int cmd_predict(const Run& run, std::ostream& out) {
  const Options& o = run.opt;
  if (o.checkpoint.empty()) throw UsageError("predict needs --checkpoint");
  if (o.positional.empty()) throw UsageError("predict needs at least one SMILES");
  const model::TrainedModel m = model::load_checkpoint(o.checkpoint);
  const auto compounds = compounds_from_smiles(o.positional);
  Options strict = o;
  strict.missing_embeddings = "error";
  const model::Dataset ds = load_dataset(strict, compounds, m.config.use_embeddings, nullptr);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto z = model::predict(m, ds, all);
  out << csv_line({"smiles", "canonical_smiles", "pic50_std", "pic50", "config_hash", "prng_id"});
  for (std::size_t i = 0; i < z.size(); ++i) {
    out << csv_line({o.positional[i], ds.keys[i], num(z[i]), num(m.scaler.invert(z[i])), run.hash,
                     std::string(nn::kPrngId)});
  }
  return kExitOk;
}

int cmd_bench(const Run& run, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const Options& o = run.opt;
  if (o.checkpoint.empty()) throw UsageError("bench needs --checkpoint");
  if (o.reps < kMinBenchReps) throw UsageError("--reps must be at least " + std::to_string(kMinBenchReps));
  const model::TrainedModel m = model::load_checkpoint(o.checkpoint);
  std::vector<data::CuratedCompound> compounds;
  if (!o.positional.empty()) {
    compounds = compounds_from_smiles(o.positional);
  } else {
    compounds = curate_input(o).compounds;
  }
  const model::Dataset ds = load_dataset(o, compounds, m.config.use_embeddings, nullptr);
  const std::size_t n = ds.size();

  volatile double sink = 0.0;
  const auto t0 = clock::now();
  for (std::size_t r = 0; r < o.reps; ++r) {
    const auto mol = chem::parse_smiles(ds.keys[r % n]);
    const auto d = desc::compute_descriptors(mol);
    const auto g = graph::build_graph(mol);
    sink = sink + d.values[0] + static_cast<double>(g.n);
  }
  const auto t1 = clock::now();
  std::vector<model::ModalityInputs> inputs;
  for (std::size_t i = 0; i < n; ++i) inputs.push_back(model::prepare_inputs(m, ds, i));
  model::FusionModel<float> net = m.net;
  nn::Rng rng(0);
  const auto t2 = clock::now();
  for (std::size_t r = 0; r < o.reps; ++r) {
    sink = sink + net.forward(std::span(&inputs[r % n], 1), nn::Mode::kEval, rng, nullptr)[0];
  }
  const auto t3 = clock::now();
  auto ms = [&](clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count() / static_cast<double>(o.reps);
  };
  const double featurize = ms(t1 - t0), forward = ms(t3 - t2);
  std::string csv = csv_line({"metric", "value", "unit", "reps", "molecules", "deterministic", "config_hash", "prng_id"});
  for (const auto& [name, v] : {std::pair{"featurize_mean", featurize}, std::pair{"forward_mean", forward}}) {
    csv += csv_line({name, num(v), "ms_per_molecule", std::to_string(o.reps), std::to_string(n), "false", run.hash,
                     std::string(nn::kPrngId)});
  }
  write_text(fs::path(o.out) / "bench.csv", csv);
  out << "timings are wall-clock measurements and vary between runs\n" << csv;
  return kExitOk;
}

int cmd_embed_check(const Run& run, std::ostream& out) {
  const Options& o = run.opt;
  if (o.positional.size() != 1) throw UsageError("embed-check needs exactly one store path");
  const io::EmbeddingStore store = io::read_store(o.positional[0]);
  std::size_t noncanonical = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (float v : store.at(i)) {
      if (!std::isfinite(v)) throw DataError("non-finite value in entry '" + store.keys()[i] + "'");
    }
    try {
      noncanonical += chem::canonicalize(store.keys()[i]) != store.keys()[i];
    } catch (const chem::SmilesError&) {
      ++noncanonical;
    }
  }
  out << "ok: " << store.size() << " entries, dim " << store.dim() << "\n";
  if (noncanonical) out << "warning: " << noncanonical << " keys are not canonical SMILES and will never join\n";
  return kExitOk;
}

void add_options(CLI::App& app, Options& o) {
  auto& f = o.fusion;
  auto& c = o.filter.columns;
  app.add_option("--input", o.input, "Activity CSV (ChEMBL layout or curated output)");
  app.add_option("--embeddings", o.embeddings, "R3EMB1 embedding store");
  app.add_option("--missing-embeddings", o.missing_embeddings, "error | drop");
  app.add_option("--descriptors-csv", o.descriptors_csv, "External descriptor table keyed by SMILES");
  app.add_option("--checkpoint", o.checkpoint, "Trained model checkpoint");
  app.add_option("--predictions", o.predictions, "predictions.csv to recompute metrics from");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--modalities", o.modalities, "Comma list of descriptors, embeddings, graph; or all");
  app.add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  app.add_option("--jobs", o.jobs, "Folds trained concurrently")->check(CLI::Range(1, 1024));
  app.add_option("--seed", f.seed, "Split and training seed (REP3NET_SEED overrides the config file)");
  app.add_option("--knn-k", o.knn_k, "Neighbors for the k-NN baseline")->check(CLI::PositiveNumber);
  app.add_option("--confidence", o.confidence, "Confidence level of fold intervals");
  app.add_option("--interval", o.interval, "t | normal");
  app.add_option("--reps", o.reps, "Benchmark repetitions");
  app.add_option("--gcn-hidden", f.gcn_hidden);
  app.add_option("--gcn-dropout", f.gcn_dropout);
  app.add_option("--fc1", f.fc1);
  app.add_option("--fc2", f.fc2);
  app.add_option("--dropout", f.dropout);
  app.add_option("--batch-size", f.batch_size);
  app.add_option("--lr", f.lr);
  app.add_option("--lr-min", f.lr_min);
  app.add_option("--weight-decay", f.weight_decay);
  app.add_flag("--decoupled-weight-decay", f.decoupled_weight_decay);
  app.add_option("--epochs", f.epochs);
  app.add_option("--variance-threshold", f.variance_threshold);
  app.add_option("--correlation-threshold", f.correlation_threshold);
  app.add_option("--pretrained-gcn", f.pretrained_gcn, "Checkpoint whose graph block seeds training");
  app.add_option("--relations", o.filter.accepted_relations, "Accepted relation tokens");
  app.add_option("--units", o.filter.units, "Accepted unit");
  app.add_option("--id-column", c.id);
  app.add_option("--smiles-column", c.smiles);
  app.add_option("--relation-column", c.relation);
  app.add_option("--value-column", c.value);
  app.add_option("--units-column", c.units);
}

bool seed_on_command_line(const std::vector<std::string>& args) {
  return std::any_of(args.begin(), args.end(), [](const std::string& a) { return a == "--seed" || a.rfind("--seed=", 0) == 0; });
}

void apply_seed_env(const std::vector<std::string>& args, Options& o) {
  if (seed_on_command_line(args)) return;
  const char* env = std::getenv("REP3NET_SEED");
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::strlen(env)) throw std::invalid_argument(env);
    o.fusion.seed = v;
  } catch (const std::exception&) {
    throw UsageError(std::string("REP3NET_SEED is not an unsigned integer: '") + env + "'");
  }
}

void error_line(std::ostream& err, int code, const char* kind, const std::string& message) {
  err << "error: exit=" << code << " kind=" << kind << " message=" << std::quoted(message) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"multimodal pIC50 regression from descriptors, embeddings and molecular graphs", "rep3net"};
  app.set_config("--config", "", "TOML file of key = value option defaults; flags override it");
  app.require_subcommand(1, 1);
  app.fallthrough();
  add_options(app, o);
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"curate", "Filter and aggregate an activity table into curated compounds"},
      {"train", "Cross-validated training with per-fold checkpoints and reports"},
      {"evaluate", "Metrics for a checkpoint on a dataset, or recomputed from predictions.csv"},
      {"ablate", "Train all seven modality subsets on identical splits"},
      {"predict", "Predict pIC50 for SMILES with a checkpoint"},
      {"bench", "Time featurization and forward passes per molecule"},
      {"embed-check", "Validate an R3EMB1 embedding store"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&o, n = std::string(name)] { o.command = n; });
    if (std::string(name) == "predict" || std::string(name) == "bench") {
      sub->add_option("smiles", o.positional, "SMILES strings");
    } else if (std::string(name) == "embed-check") {
      sub->add_option("store", o.positional, "Embedding store path")->required();
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      out << app.help();
      return kExitOk;
    }
    err << app.help() << "\n";
    error_line(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  try {
    apply_seed_env(args, o);
    apply_modalities(o);
    interval_mode(o);
    missing_policy(o);
    if (!(o.confidence > 0.0 && o.confidence < 1.0)) throw UsageError("--confidence must lie in (0, 1)");
    try {
      o.fusion.validate();
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    const Run run = make_run(o);
    if (o.command == "curate") return cmd_curate(run, out);
    if (o.command == "train") return cmd_train(run, out);
    if (o.command == "evaluate") return cmd_evaluate(run, out);
    if (o.command == "ablate") return cmd_ablate(run, out);
    if (o.command == "predict") return cmd_predict(run, out);
    if (o.command == "bench") return cmd_bench(run, out);
    if (o.command == "embed-check") return cmd_embed_check(run, out);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    error_line(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const ShapeError& e) {
    // At this level a shape error means two artifacts do not fit together.
    error_line(err, kExitData, "incompatible", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    error_line(err, kExitNumeric, "numeric", e.what());
    return kExitNumeric;
  } catch (const FormatError& e) {
    error_line(err, kExitData, "format", e.what());
    return kExitData;
  } catch (const DataError& e) {
    error_line(err, kExitData, "data", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    error_line(err, kExitData, "io", e.what());
    return kExitData;
  }
}

}  // namespace rep3net::cli
