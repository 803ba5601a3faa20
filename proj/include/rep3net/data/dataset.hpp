#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rep3net/io/csv.hpp"

namespace rep3net::data {

struct ColumnNames {
  std::string id = "molecule_chembl_id";
  std::string smiles = "canonical_smiles";
  std::string relation = "standard_relation";
  std::string value = "standard_value";
  std::string units = "standard_units";
};

struct FilterOptions {
  ColumnNames columns;
  std::vector<std::string> accepted_relations{"="};
  std::string units = "nM";
};

struct ActivityRecord {
  std::string record_id;
  std::string smiles;            // as given in the input
  std::string canonical_smiles;  // dedup key
  std::string relation;
  double ic50_nm = 0.0;
};

// Drop reasons, counted for the first check a row fails, in this order.
inline constexpr const char* kDropMissingSmiles = "missing_smiles";
inline constexpr const char* kDropMissingRelation = "missing_relation";
inline constexpr const char* kDropCensored = "censored_relation";
inline constexpr const char* kDropUnits = "non_nM_units";
inline constexpr const char* kDropMissingValue = "missing_value";
inline constexpr const char* kDropInvalidValue = "invalid_value";
inline constexpr const char* kDropUnparseableSmiles = "unparseable_smiles";

struct LoadResult {
  std::vector<ActivityRecord> records;
  std::size_t rows_read = 0;
  std::map<std::string, std::size_t> dropped;  // reason -> count
  std::vector<std::string> warnings;
  bool curated_input = false;  // input already had the curated column layout
};

/// Filters raw activity rows (header first). A table with the curated layout
/// (canonical_smiles, ic50_nm_median, pic50) is accepted as exact nM values,
/// which makes curation idempotent. Throws DataError for a missing column.
LoadResult filter_rows(const std::vector<io::CsvRow>& csv, const FilterOptions& options = {});
LoadResult load_and_filter(const std::filesystem::path& path, const FilterOptions& options = {});

struct CuratedCompound {
  std::string canonical_smiles;
  double ic50_nm_median = 0.0;
  double pic50 = 0.0;
  std::size_t measurements = 0;
};

/// Groups by canonical SMILES in order of first appearance; even-sized
/// groups take the mean of the two middle values.
std::vector<CuratedCompound> aggregate_duplicates(const std::vector<ActivityRecord>& records);

double median(std::vector<double> values);

/// pIC50 = -log10(ic50_nm * 1e-9) = 9 - log10(ic50_nm). Throws DataError
/// for non-positive input.
double to_pic50(double ic50_nm);

void write_curated_csv(std::ostream& out, const std::vector<CuratedCompound>& compounds);
std::vector<CuratedCompound> read_curated_csv(const std::filesystem::path& path);

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::size_t> train, val, test;  // ascending
};

/// k-fold splits: one seeded shuffle, test = k-th contiguous slice of the
/// shuffled order, validation = the first round(remaining / 16) of the
/// remaining shuffled indices, train = the rest. Throws DataError for n < 20.
std::vector<FoldSplit> make_cv_splits(std::size_t n, std::uint64_t seed = 42, int k = 5);

struct TargetScaler {
  double mean = 0.0;
  double std = 1.0;

  /// Population mean/std; throws DataError when std is zero.
  static TargetScaler fit(const std::vector<double>& values);
  double apply(double y) const { return (y - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

}  // namespace rep3net::data
