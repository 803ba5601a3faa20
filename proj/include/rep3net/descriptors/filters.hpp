#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace rep3net::desc {

/// Row-major table of per-compound feature rows.
using Rows = std::vector<std::vector<double>>;

struct FeatureStats {
  std::vector<std::size_t> retained;  // surviving column indices, strictly increasing
  std::vector<double> mean;           // one entry per retained column
  std::vector<double> std;            // population standard deviation
};

inline constexpr double kNormalizeGuard = 1e-6;

/// Columns whose population variance is at least `threshold`. Requires at
/// least two rows.
std::vector<std::size_t> variance_filter(const Rows& rows, double threshold = 0.01);

/// Scans `columns` left to right and keeps a column unless an earlier kept
/// column has |pearson r| > threshold with it. Throws DataError for a
/// zero-variance column.
std::vector<std::size_t> correlation_filter(const Rows& rows, const std::vector<std::size_t>& columns,
                                            double threshold = 0.9);

/// Population mean and standard deviation of the given columns.
FeatureStats fit_stats(const Rows& rows, const std::vector<std::size_t>& columns);

/// Variance filter, then correlation filter, then statistics; all computed
/// on `training_rows` only.
FeatureStats fit_pipeline(const Rows& training_rows, double variance_threshold = 0.01,
                          double correlation_threshold = 0.9);

/// Selects the retained columns and maps each value to (f - mean) / (std + 1e-6).
Rows normalize(const Rows& rows, const FeatureStats& stats);
std::vector<double> normalize_row(const std::vector<double>& row, const FeatureStats& stats);

/// Inverse of normalize on the retained columns.
Rows denormalize(const Rows& normalized, const FeatureStats& stats);

/// External descriptor table: header row, first column is the record key,
/// remaining columns are numeric features.
struct DescriptorTable {
  std::vector<std::string> columns;  // feature names (key column excluded)
  std::vector<std::string> keys;
  Rows rows;
};

DescriptorTable read_descriptor_csv(const std::filesystem::path& path);

}  // namespace rep3net::desc
