#include "rep3net/descriptors/filters.hpp"

#include <cmath>

#include "rep3net/error.hpp"
#include "rep3net/io/csv.hpp"

namespace rep3net::desc {

namespace {

std::size_t width_of(const Rows& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) throw ShapeError("feature rows have inconsistent widths");
  }
  return d;
}

double column_mean(const Rows& rows, std::size_t j) {
  double s = 0.0;
  for (const auto& r : rows) s += r[j];
  return s / static_cast<double>(rows.size());
}

double column_variance(const Rows& rows, std::size_t j, double mean) {
  double s = 0.0;
  for (const auto& r : rows) s += (r[j] - mean) * (r[j] - mean);
  return s / static_cast<double>(rows.size());
}

}  // namespace

std::vector<std::size_t> variance_filter(const Rows& rows, double threshold) {
  if (rows.size() < 2) throw DataError("variance_filter needs at least two rows");
  const std::size_t d = width_of(rows);
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < d; ++j) {
    if (column_variance(rows, j, column_mean(rows, j)) >= threshold) kept.push_back(j);
  }
  return kept;
}

std::vector<std::size_t> correlation_filter(const Rows& rows, const std::vector<std::size_t>& columns,
                                            double threshold) {
  if (rows.size() < 2) throw DataError("correlation_filter needs at least two rows");
  width_of(rows);
  const std::size_t n = rows.size();
  // Centered, unit-norm copies of every candidate column.
  std::vector<std::vector<double>> unit(columns.size(), std::vector<double>(n));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const std::size_t j = columns[c];
    const double mean = column_mean(rows, j);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      unit[c][i] = rows[i][j] - mean;
      norm += unit[c][i] * unit[c][i];
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw DataError("correlation_filter: column " + std::to_string(j) + " has zero variance");
    for (double& v : unit[c]) v /= norm;
  }
  std::vector<std::size_t> kept_pos;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    bool redundant = false;
    for (std::size_t k : kept_pos) {
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) r += unit[c][i] * unit[k][i];
      if (std::fabs(r) > threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) {
      kept_pos.push_back(c);
      kept.push_back(columns[c]);
    }
  }
  return kept;
}

FeatureStats fit_stats(const Rows& rows, const std::vector<std::size_t>& columns) {
  if (rows.empty()) throw DataError("fit_stats needs at least one row");
  width_of(rows);
  FeatureStats stats;
  stats.retained = columns;
  for (std::size_t j : columns) {
    const double mean = column_mean(rows, j);
    stats.mean.push_back(mean);
    stats.std.push_back(std::sqrt(column_variance(rows, j, mean)));
  }
  return stats;
}

FeatureStats fit_pipeline(const Rows& training_rows, double variance_threshold, double correlation_threshold) {
  const auto by_variance = variance_filter(training_rows, variance_threshold);
  const auto by_correlation = correlation_filter(training_rows, by_variance, correlation_threshold);
  return fit_stats(training_rows, by_correlation);
}

std::vector<double> normalize_row(const std::vector<double>& row, const FeatureStats& stats) {
  std::vector<double> out(stats.retained.size());
  for (std::size_t k = 0; k < stats.retained.size(); ++k) {
    const std::size_t j = stats.retained[k];
    if (j >= row.size()) throw ShapeError("feature row is narrower than the fitted statistics");
    out[k] = (row[j] - stats.mean[k]) / (stats.std[k] + kNormalizeGuard);
  }
  return out;
}

Rows normalize(const Rows& rows, const FeatureStats& stats) {
  Rows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(normalize_row(r, stats));
  return out;
}

Rows denormalize(const Rows& normalized, const FeatureStats& stats) {
  Rows out;
  out.reserve(normalized.size());
  for (const auto& r : normalized) {
    if (r.size() != stats.retained.size()) throw ShapeError("normalized row width does not match statistics");
    std::vector<double> row(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) row[k] = r[k] * (stats.std[k] + kNormalizeGuard) + stats.mean[k];
    out.push_back(std::move(row));
  }
  return out;
}

DescriptorTable read_descriptor_csv(const std::filesystem::path& path) {
  const auto csv = io::read_csv(path);
  if (csv.empty()) throw DataError(path.string() + ": missing header row");
  const auto& header = csv.front();
  if (header.size() < 2) throw DataError(path.string() + ": need a key column and at least one descriptor");
  DescriptorTable table;
  table.columns.assign(header.begin() + 1, header.end());
  for (std::size_t r = 1; r < csv.size(); ++r) {
    const auto& row = csv[r];
    if (row.size() != header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> values;
    values.reserve(row.size() - 1);
    for (std::size_t c = 1; c < row.size(); ++c) {
      const auto v = io::parse_double(row[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path.string() + ": row " + std::to_string(r + 1) + ", column '" + header[c] +
                        "' is not a finite number");
      }
      values.push_back(*v);
    }
    table.keys.push_back(row[0]);
    table.rows.push_back(std::move(values));
  }
  return table;
}

}  // namespace rep3net::desc
