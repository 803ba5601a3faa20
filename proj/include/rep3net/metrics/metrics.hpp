#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rep3net::metrics {

/// Value reported for an undefined correlation or R²; always paired with a flag.
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// All functions throw DataError for empty or unequal-length input.
double mse(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
double mae(std::span<const double> y, std::span<const double> y_hat);
/// 1 - SS_res / SS_tot; throws DataError when y is constant.
double r2(std::span<const double> y, std::span<const double> y_hat);
/// kUndefined when either vector is constant.
double pearson(std::span<const double> y, std::span<const double> y_hat);
/// Pearson on average ranks; kUndefined when either rank vector is constant
/// or n < 2.
double spearman(std::span<const double> y, std::span<const double> y_hat);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct MetricsReport {
  std::size_t n = 0;
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double pearson = 0.0;
  double spearman = 0.0;
  std::vector<std::string> flags;
};

/// All six metrics; degenerate R² and correlations become kUndefined with a
/// flag instead of raising.
MetricsReport evaluate(std::span<const double> y, std::span<const double> y_hat);

enum class IntervalMode { kStudentT, kNormal };

/// Two-sided critical value: t_{(1+confidence)/2, df} or z_{(1+confidence)/2}.
/// The t values for confidence 0.95 and df < 30 come from a fixed table.
double critical_value(double confidence, std::size_t df, IntervalMode mode);

struct Summary {
  double mean = 0.0;
  double ci_half_width = 0.0;  // critical * s / sqrt(k), s the sample std
};

Summary summarize(std::span<const double> values, double confidence = 0.95,
                  IntervalMode mode = IntervalMode::kStudentT);

struct FoldAggregate {
  std::size_t k = 0;
  Summary mse, rmse, mae, r2, pearson, spearman;
  std::vector<std::string> flags;
};

/// Throws DataError for fewer than 2 reports. A metric undefined in any fold
/// aggregates to kUndefined and is flagged.
FoldAggregate aggregate_folds(const std::vector<MetricsReport>& reports, double confidence = 0.95,
                              IntervalMode mode = IntervalMode::kStudentT);

}  // namespace rep3net::metrics
