#include "rep3net/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "rep3net/error.hpp"

namespace rep3net::metrics {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw DataError("metrics: empty input");
  if (y.size() != y_hat.size()) throw DataError("metrics: length mismatch");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// t_{0.975, df} for df = 1..29.
constexpr std::array<double, 29> kT975 = {
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139,
    2.200985,  2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963,
    2.079614,  2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230};

}  // namespace

double mse(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) { return std::sqrt(mse(y, y_hat)); }

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const double m = mean_of(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    ss_tot += (y[i] - m) * (y[i] - m);
  }
  if (!(ss_tot > 0.0)) throw DataError("r2: targets are constant");
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  const double my = mean_of(y), mp = mean_of(y_hat);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my, b = y_hat[i] - mp;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return kUndefined;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> y, std::span<const double> y_hat) {
  check_pair(y, y_hat);
  if (y.size() < 2) return kUndefined;
  const auto ry = average_ranks(y), rp = average_ranks(y_hat);
  return pearson(ry, rp);
}

MetricsReport evaluate(std::span<const double> y, std::span<const double> y_hat) {
  MetricsReport r;
  r.n = y.size();
  r.mse = mse(y, y_hat);
  r.rmse = std::sqrt(r.mse);
  r.mae = mae(y, y_hat);
  try {
    r.r2 = r2(y, y_hat);
  } catch (const DataError&) {
    r.r2 = kUndefined;
    r.flags.emplace_back("r2_undefined:constant_targets");
  }
  r.pearson = pearson(y, y_hat);
  if (std::isnan(r.pearson)) r.flags.emplace_back("pearson_undefined:constant_input");
  r.spearman = spearman(y, y_hat);
  if (std::isnan(r.spearman)) r.flags.emplace_back("spearman_undefined:constant_ranks");
  return r;
}

double critical_value(double confidence, std::size_t df, IntervalMode mode) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw DataError("confidence must lie in (0, 1)");
  const double p = 0.5 * (1.0 + confidence);
  if (mode == IntervalMode::kNormal) return boost::math::quantile(boost::math::normal_distribution<double>(), p);
  if (df == 0) throw DataError("t interval needs at least one degree of freedom");
  if (confidence == 0.95 && df <= kT975.size()) return kT975[df - 1];
  return boost::math::quantile(boost::math::students_t_distribution<double>(static_cast<double>(df)), p);
}

Summary summarize(std::span<const double> values, double confidence, IntervalMode mode) {
  const std::size_t k = values.size();
  if (k < 2) throw DataError("fold aggregation needs at least 2 folds");
  Summary s;
  s.mean = mean_of(values);
  // Shifted by the first value so identical folds give exactly zero spread.
  const double shift = values[0];
  double sum = 0.0, ss = 0.0;
  for (double v : values) sum += v - shift;
  const double dmean = sum / static_cast<double>(k);
  for (double v : values) ss += (v - shift - dmean) * (v - shift - dmean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  s.ci_half_width = critical_value(confidence, k - 1, mode) * sd / std::sqrt(static_cast<double>(k));
  return s;
}

FoldAggregate aggregate_folds(const std::vector<MetricsReport>& reports, double confidence, IntervalMode mode) {
  if (reports.size() < 2) throw DataError("fold aggregation needs at least 2 folds");
  FoldAggregate agg;
  agg.k = reports.size();
  auto column = [&](double MetricsReport::*field, const char* name) {
    std::vector<double> v;
    for (const MetricsReport& r : reports) v.push_back(r.*field);
    if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
      agg.flags.push_back(std::string(name) + "_undefined_in_some_fold");
      return Summary{kUndefined, kUndefined};
    }
    return summarize(v, confidence, mode);
  };
  agg.mse = column(&MetricsReport::mse, "mse");
  agg.rmse = column(&MetricsReport::rmse, "rmse");
  agg.mae = column(&MetricsReport::mae, "mae");
  agg.r2 = column(&MetricsReport::r2, "r2");
  agg.pearson = column(&MetricsReport::pearson, "pearson");
  agg.spearman = column(&MetricsReport::spearman, "spearman");
  return agg;
}

}  // namespace rep3net::metrics
