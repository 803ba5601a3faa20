#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "oracles.hpp"
#include "rep3net/io/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = rep3net::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rep3net_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) { return rep3net::io::read_csv(p.string()); }

const std::string kActivities = oracle::data_path("smoke_activities.csv");
const std::string kStore = oracle::data_path("smoke_embeddings.r3emb");
const std::string kConfig = oracle::data_path("smoke_config.toml");

// Tiny network and few epochs: exercises the plumbing, not the learning.
std::vector<std::string> quick_train(const fs::path& out) {
  return {"train", "--input", kActivities, "--embeddings", kStore, "--out", out.string(),
          "--epochs", "2", "--fc1", "16", "--fc2", "8", "--gcn-hidden", "8", "--folds", "3", "--lr", "0.001"};
}

struct EnvSeed {
  explicit EnvSeed(const char* v) { setenv("REP3NET_SEED", v, 1); }
  ~EnvSeed() { unsetenv("REP3NET_SEED"); }
};

}  // namespace

TEST(Cli, CurateFixtureReportsCensoredRows) {
  const auto dir = scratch("curate");
  const auto r = run({"curate", "--input", oracle::data_path("curation_fixture.csv"), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(slurp(dir / "curated" / "curation_report.json"));
  EXPECT_EQ(report["rows_read"], 10);
  EXPECT_EQ(report["records_kept"], 8);
  EXPECT_EQ(report["compounds"], 7);
  EXPECT_EQ(report["dropped"]["censored_relation"], 2);
  const auto rows = csv(dir / "curated" / "curated.csv");
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"canonical_smiles", "ic50_nm_median", "pic50"}));
  EXPECT_EQ(rows[1][0], "CCO");
  EXPECT_EQ(rows[1][1], "20");
}

TEST(Cli, CurationIsIdempotentOnItsOwnOutput) {
  const auto a = scratch("idem_a"), b = scratch("idem_b");
  ASSERT_EQ(run({"curate", "--input", kActivities, "--out", a.string()}).code, 0);
  const auto first = a / "curated" / "curated.csv";
  ASSERT_EQ(run({"curate", "--input", first.string(), "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(first), slurp(b / "curated" / "curated.csv"));
}

TEST(Cli, MissingColumnIsADataErrorNamingTheColumn) {
  const auto dir = scratch("missing_col");
  const auto r = run({"curate", "--input", oracle::data_path("curation_fixture.csv"), "--smiles-column", "smi",
                      "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("kind=data"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("'smi'"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputFileIsADataError) {
  const auto r = run({"curate", "--input", "/nonexistent/activities.csv"});
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, 1);
  EXPECT_EQ(run({"train", "--folds", "1", "--input", kActivities}).code, 1);
  EXPECT_EQ(run({"train", "--input", kActivities, "--modalities", "images"}).code, 1);
  EXPECT_EQ(run({"train", "--input", kActivities, "--interval", "bootstrap"}).code, 1);
  EXPECT_EQ(run({"train", "--input", kActivities, "--confidence", "1.5"}).code, 1);
  EXPECT_EQ(run({"curate"}).code, 1);
  const auto dir = scratch("usage");
  const auto r = run({"train", "--input", kActivities, "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--embeddings"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out"));  // nothing written before the inputs are complete
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, InvalidHyperparametersExitOne) {
  auto args = quick_train(scratch("bad_hp"));
  args.insert(args.end(), {"--dropout", "1.5"});
  EXPECT_EQ(run(args).code, 1);
}

TEST(Cli, SeedPrecedenceIsFlagThenEnvThenConfig) {
  auto seed_of = [](const fs::path& dir) { return json::parse(slurp(dir / "run.json"))["config"]["fusion"]["seed"]; };
  const auto cfg = scratch("seed_cfg"), env = scratch("seed_env"), flag = scratch("seed_flag");
  {
    auto a = quick_train(cfg);
    a.insert(a.begin(), {"--config", kConfig});
    ASSERT_EQ(run(a).code, 0);
  }
  EXPECT_EQ(seed_of(cfg), 42);
  {
    EnvSeed e("7");
    auto a = quick_train(env);
    a.insert(a.begin(), {"--config", kConfig});
    ASSERT_EQ(run(a).code, 0);
    auto b = quick_train(flag);
    b.insert(b.begin(), {"--config", kConfig});
    b.insert(b.end(), {"--seed", "9"});
    ASSERT_EQ(run(b).code, 0);
  }
  EXPECT_EQ(seed_of(env), 7);
  EXPECT_EQ(seed_of(flag), 9);
  {
    EnvSeed e("seven");
    EXPECT_EQ(run(quick_train(scratch("seed_bad"))).code, 1);
  }
}

TEST(Cli, ConfigFileValuesReachTheRun) {
  const auto dir = scratch("config");
  auto a = quick_train(dir);
  a.insert(a.begin(), {"--config", kConfig});
  ASSERT_EQ(run(a).code, 0);
  const auto fusion = json::parse(slurp(dir / "run.json"))["config"]["fusion"];
  EXPECT_EQ(fusion["batch_size"], 4);
  EXPECT_EQ(fusion["epochs"], 2);  // the flag beats the file
  EXPECT_EQ(fusion["fc1"], 16);
}

TEST(Cli, TrainWritesPerFoldArtifactsAndAggregate) {
  const auto dir = scratch("train");
  const auto r = run(quick_train(dir));
  ASSERT_EQ(r.code, 0) << r.err;
  for (int f = 0; f < 3; ++f) {
    const auto fold = dir / "folds" / ("fold_" + std::to_string(f));
    for (const char* name : {"checkpoint.r3ckpt", "history.csv", "report.csv", "predictions.csv"}) {
      EXPECT_TRUE(fs::exists(fold / name)) << fold / name;
    }
    const auto history = csv(fold / "history.csv");
    EXPECT_EQ(history.size(), 3u);
    const auto report = csv(fold / "report.csv");
    ASSERT_EQ(report.size(), 4u);
    EXPECT_EQ(report[1][1], "test");
    EXPECT_EQ(report[2][1], "val");
    EXPECT_EQ(report[3][2], "knn_k5");
    EXPECT_EQ(report[1][14].size(), 16u);  // config hash
    EXPECT_EQ(report[1][15], "mt19937_64/reject-mod/fisher-yates-desc");
  }
  const auto agg = csv(dir / "aggregate.csv");
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[1][0], "descriptors+embeddings+graph");
  EXPECT_EQ(agg[1][1], "3");
  EXPECT_EQ(agg[2][0], "knn_k5");
  EXPECT_NE(r.out.find("mse"), std::string::npos);
}

TEST(Cli, RunsAreByteIdenticalAcrossOutputDirsAndJobCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run(quick_train(a)).code, 0);
  auto args = quick_train(b);
  args.insert(args.end(), {"--jobs", "3"});
  ASSERT_EQ(run(args).code, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 3u * 4u + 4u);
}

TEST(Cli, GraphOnlyRunNeedsNoEmbeddings) {
  const auto dir = scratch("graph_only");
  const auto r = run({"train", "--input", kActivities, "--modalities", "graph", "--out", dir.string(), "--epochs",
                      "2", "--fc1", "16", "--fc2", "8", "--gcn-hidden", "8", "--folds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv(dir / "aggregate.csv")[1][0], "graph");
}

TEST(Cli, PredictEvaluateAndBenchUseACheckpoint) {
  const auto dir = scratch("use_ckpt");
  ASSERT_EQ(run(quick_train(dir)).code, 0);
  const auto ckpt = (dir / "folds" / "fold_0" / "checkpoint.r3ckpt").string();
  const auto curated = csv(dir / "curated" / "curated.csv");

  const auto p = run({"predict", "--checkpoint", ckpt, "--embeddings", kStore, curated[1][0], curated[2][0]});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto rows = rep3net::io::parse_csv(p.out);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_EQ(rows[i][1], curated[i][0]);
    EXPECT_TRUE(std::isfinite(std::stod(rows[i][3])));
  }
  const auto missing = run({"predict", "--checkpoint", ckpt, "--embeddings", kStore, "CCO"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(run({"predict", "--checkpoint", ckpt, "--embeddings", kStore, "C1CC"}).code, 2);

  // Metrics recomputed from predictions.csv match the fold report.
  const auto e = run({"evaluate", "--predictions", (dir / "folds" / "fold_0" / "predictions.csv").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto recomputed = rep3net::io::parse_csv(e.out);
  const auto report = csv(dir / "folds" / "fold_0" / "report.csv");
  for (std::size_t c = 3; c <= 11; ++c) EXPECT_EQ(recomputed[1][c], report[1][c]) << report[0][c];

  const auto ev_dir = scratch("use_ckpt_eval");
  const auto full = run({"evaluate", "--checkpoint", ckpt, "--input", kActivities, "--embeddings", kStore, "--out",
                         ev_dir.string()});
  ASSERT_EQ(full.code, 0) << full.err;
  EXPECT_EQ(csv(ev_dir / "evaluation" / "predictions.csv").size(), 301u);

  const auto bench_dir = scratch("use_ckpt_bench");
  const auto bench = run({"bench", "--checkpoint", ckpt, "--input", kActivities, "--embeddings", kStore, "--out",
                          bench_dir.string()});
  ASSERT_EQ(bench.code, 0) << bench.err;
  const auto timings = csv(bench_dir / "bench.csv");
  ASSERT_EQ(timings.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_GT(std::stod(timings[i][1]), 0.0);
    EXPECT_EQ(timings[i][3], "1000");
    EXPECT_EQ(timings[i][5], "false");
  }
  EXPECT_EQ(run({"bench", "--checkpoint", ckpt, "--input", kActivities, "--embeddings", kStore, "--reps", "999"}).code,
            1);
}

TEST(Cli, IncompatibleArtifactsExitTwo) {
  const auto dir = scratch("incompatible");
  ASSERT_EQ(run(quick_train(dir)).code, 0);
  const auto ckpt = (dir / "folds" / "fold_0" / "checkpoint.r3ckpt").string();
  // A store of a different width cannot feed this checkpoint.
  const auto store_path = dir / "narrow.r3emb";
  {
    std::ofstream out(store_path, std::ios::binary);
    const std::string key = "CC1=CC(C=CC1=O)=O";
    out.write("R3EMB1", 6);
    const std::uint32_t n = 1, dim = 2;
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    const std::uint16_t len = static_cast<std::uint16_t>(key.size());
    out.write(reinterpret_cast<const char*>(&len), 2);
    out.write(key.data(), key.size());
    const float v[2] = {0.5f, -0.5f};
    out.write(reinterpret_cast<const char*>(v), sizeof v);
  }
  const auto r = run({"predict", "--checkpoint", ckpt, "--embeddings", store_path.string(), "CC1=CC(=O)C=CC1=O"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("width mismatch"), std::string::npos) << r.err;

  auto corrupt = slurp(ckpt);
  corrupt[corrupt.size() / 2] ^= 0x5A;
  const auto bad = dir / "corrupt.r3ckpt";
  std::ofstream(bad, std::ios::binary) << corrupt;
  const auto c = run({"predict", "--checkpoint", bad.string(), "--embeddings", kStore, "CCO"});
  EXPECT_EQ(c.code, 2);
  EXPECT_NE(c.err.find("checksum mismatch"), std::string::npos) << c.err;
}

TEST(Cli, AblateWritesSevenRowsWithReferenceColumns) {
  const auto dir = scratch("ablate");
  const auto r = run({"ablate", "--input", kActivities, "--embeddings", kStore, "--out", dir.string(), "--epochs",
                      "1", "--fc1", "8", "--fc2", "4", "--gcn-hidden", "4", "--folds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv(dir / "ablation.csv");
  ASSERT_EQ(rows.size(), 8u);
  const std::vector<std::string> labels = {"descriptors", "embeddings", "graph", "descriptors+embeddings",
                                           "embeddings+graph", "descriptors+graph", "descriptors+embeddings+graph"};
  const auto& h = rows[0];
  const auto col = [&](const char* name) { return std::find(h.begin(), h.end(), name) - h.begin(); };
  ASSERT_LT(static_cast<std::size_t>(col("reference_mse")), h.size());
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(rows[i + 1][1], labels[i]);
    EXPECT_FALSE(rows[i + 1][col("reference_mse")].empty());
    EXPECT_FALSE(rows[i + 1][col("fold1_mse")].empty());
  }
  const auto summary = json::parse(slurp(dir / "run.json"));
  EXPECT_TRUE(summary.contains("full_fusion_best_folds"));
  EXPECT_TRUE(summary["reference_order_disagreements"].is_array());
}

TEST(Cli, EmbedCheck) {
  const auto ok = run({"embed-check", kStore});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("300 entries, dim 64"), std::string::npos) << ok.out;
  EXPECT_EQ(ok.out.find("warning"), std::string::npos);

  const auto dir = scratch("embed_check");
  auto write = [&](const std::string& name, const std::string& key, float value) {
    const auto p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out.write("R3EMB1", 6);
    const std::uint32_t n = 1, dim = 1;
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    const std::uint16_t len = static_cast<std::uint16_t>(key.size());
    out.write(reinterpret_cast<const char*>(&len), 2);
    out.write(key.data(), key.size());
    out.write(reinterpret_cast<const char*>(&value), 4);
    return p.string();
  };
  const auto nan = run({"embed-check", write("nan.r3emb", "CCO", std::nanf(""))});
  EXPECT_EQ(nan.code, 2);
  EXPECT_NE(nan.err.find("non-finite"), std::string::npos) << nan.err;
  const auto noncanon = run({"embed-check", write("noncanon.r3emb", "OCC", 1.0f)});
  EXPECT_EQ(noncanon.code, 0);
  EXPECT_NE(noncanon.out.find("warning: 1 keys"), std::string::npos) << noncanon.out;

  auto bytes = slurp(kStore);
  bytes.pop_back();
  std::ofstream(dir / "short.r3emb", std::ios::binary) << bytes;
  const auto truncated = run({"embed-check", (dir / "short.r3emb").string()});
  EXPECT_EQ(truncated.code, 2);
  EXPECT_NE(truncated.err.find("kind=format"), std::string::npos) << truncated.err;
}

TEST(Cli, BinaryReportsExitCodes) {
  const std::string bin = REP3NET_CLI;
  EXPECT_EQ(std::system((bin + " --help > /dev/null").c_str()), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " train --bogus 2> /dev/null").c_str())), 1);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " embed-check " + kStore + " > /dev/null").c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " embed-check /nonexistent.r3emb 2> /dev/null").c_str())), 2);
}
