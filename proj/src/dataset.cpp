#include "rep3net/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rep3net/chem/smiles.hpp"
#include "rep3net/error.hpp"
#include "rep3net/nn/random.hpp"

namespace rep3net::data {

namespace {

std::string trim(std::string s) {
  const auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && blank(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && blank(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

// ChEMBL exports quote relation symbols as 'x'.
std::string unquote_relation(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && s.front() == '\'' && s.back() == '\'') s = s.substr(1, s.size() - 2);
  return s;
}

std::size_t require_column(const io::CsvRow& header, const std::string& name) {
  const auto idx = io::column_index(header, name);
  if (!idx) throw DataError("missing required column '" + name + "'");
  return *idx;
}

}  // namespace

LoadResult filter_rows(const std::vector<io::CsvRow>& csv, const FilterOptions& options) {
  if (csv.empty()) throw DataError("input CSV has no header row");
  const io::CsvRow& header = csv.front();
  LoadResult result;
  const ColumnNames& names = options.columns;

  const bool curated = io::column_index(header, "canonical_smiles") && io::column_index(header, "ic50_nm_median") &&
                       !io::column_index(header, names.relation);
  result.curated_input = curated;
  std::size_t smiles_col, value_col;
  std::optional<std::size_t> id_col, relation_col, units_col;
  if (curated) {
    smiles_col = require_column(header, "canonical_smiles");
    value_col = require_column(header, "ic50_nm_median");
  } else {
    id_col = require_column(header, names.id);
    smiles_col = require_column(header, names.smiles);
    relation_col = require_column(header, names.relation);
    value_col = require_column(header, names.value);
    units_col = require_column(header, names.units);
  }

  for (std::size_t r = 1; r < csv.size(); ++r) {
    const io::CsvRow& row = csv[r];
    ++result.rows_read;
    auto field = [&](std::optional<std::size_t> c) { return c && *c < row.size() ? trim(row[*c]) : std::string(); };
    auto drop = [&](const char* reason) { ++result.dropped[reason]; };

    ActivityRecord rec;
    rec.record_id = id_col ? field(id_col) : "row" + std::to_string(r);
    rec.smiles = field(smiles_col);
    if (rec.smiles.empty()) {
      drop(kDropMissingSmiles);
      continue;
    }
    if (!curated) {
      rec.relation = unquote_relation(field(relation_col));
      if (rec.relation.empty()) {
        drop(kDropMissingRelation);
        continue;
      }
      if (std::find(options.accepted_relations.begin(), options.accepted_relations.end(), rec.relation) ==
          options.accepted_relations.end()) {
        drop(kDropCensored);
        continue;
      }
      if (field(units_col) != options.units) {
        drop(kDropUnits);
        continue;
      }
    } else {
      rec.relation = "=";
    }
    const std::string value_text = field(value_col);
    if (value_text.empty()) {
      drop(kDropMissingValue);
      continue;
    }
    const auto value = io::parse_double(value_text);
    if (!value || !std::isfinite(*value) || *value <= 0.0) {
      drop(kDropInvalidValue);
      continue;
    }
    rec.ic50_nm = *value;
    try {
      chem::ParseDiagnostics diag;
      rec.canonical_smiles = chem::canonical_smiles(chem::parse_smiles(rec.smiles, &diag));
      for (const auto& w : diag.warnings) result.warnings.push_back(rec.record_id + ": " + w);
    } catch (const chem::SmilesError& e) {
      drop(kDropUnparseableSmiles);
      result.warnings.push_back(rec.record_id + ": " + e.what());
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_and_filter(const std::filesystem::path& path, const FilterOptions& options) {
  return filter_rows(io::read_csv(path), options);
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double to_pic50(double ic50_nm) {
  if (!(ic50_nm > 0.0) || !std::isfinite(ic50_nm)) throw DataError("IC50 must be a positive finite nM value");
  return 9.0 - std::log10(ic50_nm);
}

std::vector<CuratedCompound> aggregate_duplicates(const std::vector<ActivityRecord>& records) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<double>> groups;
  for (const ActivityRecord& r : records) {
    auto [it, inserted] = groups.try_emplace(r.canonical_smiles);
    if (inserted) order.push_back(r.canonical_smiles);
    it->second.push_back(r.ic50_nm);
  }
  std::vector<CuratedCompound> out;
  out.reserve(order.size());
  for (const std::string& key : order) {
    const auto& values = groups.at(key);
    CuratedCompound c;
    c.canonical_smiles = key;
    c.ic50_nm_median = median(values);
    c.pic50 = to_pic50(c.ic50_nm_median);
    c.measurements = values.size();
    out.push_back(std::move(c));
  }
  return out;
}

void write_curated_csv(std::ostream& out, const std::vector<CuratedCompound>& compounds) {
  io::write_csv_row(out, {"canonical_smiles", "ic50_nm_median", "pic50"});
  for (const CuratedCompound& c : compounds) {
    io::write_csv_row(out, {c.canonical_smiles, io::format_double(c.ic50_nm_median), io::format_double(c.pic50)});
  }
}

std::vector<CuratedCompound> read_curated_csv(const std::filesystem::path& path) {
  const auto csv = io::read_csv(path);
  if (csv.empty()) throw DataError(path.string() + ": empty curated file");
  const std::size_t s = require_column(csv[0], "canonical_smiles");
  const std::size_t v = require_column(csv[0], "ic50_nm_median");
  std::vector<CuratedCompound> out;
  for (std::size_t r = 1; r < csv.size(); ++r) {
    const auto value = csv[r].size() > v ? io::parse_double(csv[r][v]) : std::nullopt;
    if (csv[r].size() <= s || !value) throw DataError(path.string() + ": malformed row " + std::to_string(r + 1));
    CuratedCompound c;
    c.canonical_smiles = csv[r][s];
    c.ic50_nm_median = *value;
    c.pic50 = to_pic50(*value);
    c.measurements = 1;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<FoldSplit> make_cv_splits(std::size_t n, std::uint64_t seed, int k) {
  if (k < 2) throw DataError("cross-validation needs at least 2 folds");
  if (n < 20) throw DataError("cannot form 75:5:20 splits from fewer than 20 compounds");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  nn::Rng rng(seed);
  nn::shuffle(order, rng);

  std::vector<FoldSplit> folds;
  const std::size_t kk = static_cast<std::size_t>(k);
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t begin = f * n / kk, end = (f + 1) * n / kk;
    FoldSplit split;
    split.fold_index = static_cast<int>(f);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= begin && i < end) {
        split.test.push_back(order[i]);
      } else {
        rest.push_back(order[i]);
      }
    }
    const std::size_t n_val = static_cast<std::size_t>(std::llround(static_cast<double>(rest.size()) / 16.0));
    split.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

TargetScaler TargetScaler::fit(const std::vector<double>& values) {
  if (values.empty()) throw DataError("target scaler: no training targets");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(var > 0.0)) throw DataError("target scaler: training targets have zero variance");
  return {mean, std::sqrt(var)};
}

}  // namespace rep3net::data
