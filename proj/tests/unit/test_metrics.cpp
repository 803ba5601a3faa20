#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rep3net/error.hpp"
#include "rep3net/metrics/metrics.hpp"
#include "rep3net/nn/random.hpp"

using namespace rep3net;
using namespace rep3net::metrics;
using V = std::vector<double>;

namespace {

namespace naive {

double mean(const V& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mse(const V& y, const V& p) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - p[i]) * (y[i] - p[i]);
  return s / static_cast<double>(y.size());
}

double mae(const V& y, const V& p) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - p[i]);
  return s / static_cast<double>(y.size());
}

double r2(const V& y, const V& p) {
  const double m = mean(y);
  double res = 0, tot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res += (y[i] - p[i]) * (y[i] - p[i]);
    tot += (y[i] - m) * (y[i] - m);
  }
  return 1 - res / tot;
}

double pearson(const V& a, const V& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Rank by counting: 1 + (# smaller) + (# equal others) / 2.
V ranks(const V& v) {
  V r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      less += v[j] < v[i];
      equal += j != i && v[j] == v[i];
    }
    r[i] = 1 + less + equal / 2;
  }
  return r;
}

// Tie-free rank-difference formula.
double spearman_no_ties(const V& a, const V& b) {
  const V ra = ranks(a), rb = ranks(b);
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double n = static_cast<double>(a.size());
  return 1 - 6 * d2 / (n * (n * n - 1));
}

// Student t quantile by bisection on a Simpson-integrated density.
double t_quantile(double p, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double t) { return c * std::pow(1 + t * t / df, -(df + 1) / 2); };
  auto cdf = [&](double x) {
    const int m = 20000;
    const double h = x / m;
    double s = pdf(0) + pdf(x);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
    return 0.5 + s * h / 3;
  };
  double lo = 0, hi = 100;
  for (int it = 0; it < 60; ++it) {
    const double mid = (lo + hi) / 2;
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace naive

V random_vec(nn::Rng& rng, std::size_t n, double scale) {
  V v(n);
  for (double& x : v) x = rng.normal() * scale;
  return v;
}

}  // namespace

TEST(ErrorMetrics, Examples) {
  const V y = {1, 2, 3};
  EXPECT_EQ(mse(y, y), 0.0);
  EXPECT_EQ(rmse(y, y), 0.0);
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_NEAR(mse(y, V{2, 2, 2}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(rmse(y, V{2, 2, 2}), 0.8165, 1e-4);
  EXPECT_NEAR(mae(y, V{2, 2, 2}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(mse(V{1, 2, 3, 4}, V{1.5, 1.5, 3.5, 3.5}), 0.25, 1e-15);
  EXPECT_NEAR(mae(V{1, 2, 3, 4}, V{1.5, 1.5, 3.5, 3.5}), 0.5, 1e-15);
  EXPECT_THROW(mse(V{}, V{}), DataError);
  EXPECT_THROW(mae(V{1}, V{1, 2}), DataError);
}

TEST(R2, Examples) {
  const V y = {1, 2, 3};
  EXPECT_EQ(r2(y, y), 1.0);
  EXPECT_NEAR(r2(y, V{2, 2, 2}), 0.0, 1e-15);
  EXPECT_THROW(r2(V{2, 2, 2}, y), DataError);
}

TEST(Pearson, Examples) {
  const V y = {1, 2, 3, 5, 8};
  V affine, neg;
  for (double v : y) {
    affine.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson(y, affine), 1.0, 1e-15);
  EXPECT_NEAR(pearson(y, neg), -1.0, 1e-15);
  EXPECT_NEAR(pearson(V{1, 2, 3}, V{1, 2, 2}), std::sqrt(3.0) / 2, 1e-15);
  EXPECT_TRUE(std::isnan(pearson(y, V{1, 1, 1, 1, 1})));
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(spearman(V{1, 2, 3, 4}, V{10, 20, 25, 100}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(V{1, 2, 3}, V{3, 1, 2}), -0.5, 1e-15);
  const V y = {1, 2, 3, 4}, p = {1, 1, 2, 2};
  EXPECT_EQ(average_ranks(p), (V{1.5, 1.5, 3.5, 3.5}));
  EXPECT_NEAR(spearman(y, p), naive::pearson(naive::ranks(y), naive::ranks(p)), 1e-15);
  EXPECT_TRUE(std::isnan(spearman(y, V{7, 7, 7, 7})));
  EXPECT_TRUE(std::isnan(spearman(V{1}, V{2})));
}

TEST(Metrics, RandomPairsMatchNaiveOracles) {
  nn::Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(60);
    const V y = random_vec(rng, n, 1.5);
    V p = random_vec(rng, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) p[i] += 0.5 * y[i];
    const auto r = evaluate(y, p);
    EXPECT_EQ(r.n, n);
    EXPECT_NEAR(r.mse, naive::mse(y, p), 1e-9);
    EXPECT_NEAR(r.rmse, std::sqrt(naive::mse(y, p)), 1e-9);
    EXPECT_NEAR(r.rmse * r.rmse, r.mse, 1e-12 * std::max(1.0, r.mse));
    EXPECT_NEAR(r.mae, naive::mae(y, p), 1e-9);
    EXPECT_NEAR(r.r2, naive::r2(y, p), 1e-9);
    EXPECT_NEAR(r.pearson, naive::pearson(y, p), 1e-9);
    EXPECT_NEAR(r.spearman, naive::spearman_no_ties(y, p), 1e-9);
    EXPECT_TRUE(r.flags.empty());
  }
}

TEST(Metrics, TiedRanksMatchBruteForce) {
  nn::Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng.below(30);
    V y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.below(5));
      p[i] = static_cast<double>(rng.below(4));
    }
    const V ry = naive::ranks(y), rp = naive::ranks(p);
    EXPECT_EQ(average_ranks(y), ry);
    const bool degenerate = *std::min_element(ry.begin(), ry.end()) == *std::max_element(ry.begin(), ry.end()) ||
                            *std::min_element(rp.begin(), rp.end()) == *std::max_element(rp.begin(), rp.end());
    if (degenerate) {
      EXPECT_TRUE(std::isnan(spearman(y, p)));
    } else {
      EXPECT_NEAR(spearman(y, p), naive::pearson(ry, rp), 1e-12);
    }
  }
}

TEST(Metrics, Invariances) {
  nn::Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const V y = random_vec(rng, 25, 1.0), p = random_vec(rng, 25, 1.0);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-5, 5);
    V q, mono;
    for (double v : p) {
      q.push_back(a * v + b);
      mono.push_back(std::exp(v) * 3 + v * v * v);
    }
    EXPECT_NEAR(pearson(y, q), (a > 0 ? 1 : -1) * pearson(y, p), 1e-12);
    EXPECT_NEAR(spearman(y, mono), spearman(y, p), 1e-12);
    const auto r = evaluate(y, p);
    EXPECT_GE(r.mse, 0.0);
    EXPECT_LE(r.r2, 1.0);
    EXPECT_LE(std::abs(r.pearson), 1.0);
    EXPECT_LE(std::abs(r.spearman), 1.0);
  }
}

TEST(Evaluate, DegenerateCasesAreFlaggedNotThrown) {
  const auto r = evaluate(V{2, 2, 2}, V{1, 2, 3});
  EXPECT_TRUE(std::isnan(r.r2));
  EXPECT_TRUE(std::isnan(r.pearson));
  EXPECT_TRUE(std::isnan(r.spearman));
  EXPECT_EQ(r.flags.size(), 3u);
  const auto c = evaluate(V{1, 2, 3}, V{0, 0, 0});
  EXPECT_FALSE(std::isnan(c.r2));
  EXPECT_TRUE(std::isnan(c.pearson));
  EXPECT_EQ(c.flags.size(), 2u);
}

TEST(CriticalValue, MatchesIntegratedDensity) {
  EXPECT_NEAR(critical_value(0.95, 1, IntervalMode::kStudentT), std::tan(0.475 * std::numbers::pi), 1e-3);
  EXPECT_NEAR(critical_value(0.95, 2, IntervalMode::kStudentT), 0.95 / std::sqrt(2 * 0.975 * 0.025), 1e-3);
  for (std::size_t df : {3u, 4u, 7u, 12u, 29u, 30u, 45u}) {
    EXPECT_NEAR(critical_value(0.95, df, IntervalMode::kStudentT), naive::t_quantile(0.975, double(df)), 1e-3) << df;
  }
  EXPECT_NEAR(critical_value(0.90, 4, IntervalMode::kStudentT), naive::t_quantile(0.95, 4), 1e-6);
  EXPECT_NEAR(critical_value(0.95, 4, IntervalMode::kNormal), 1.959964, 1e-6);
}

TEST(AggregateFolds, Examples) {
  const V v = {1, 2, 3, 4, 5};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.ci_half_width, 1.963, 1e-3);
  EXPECT_NEAR(s.ci_half_width, 2.776 * std::sqrt(2.5) / std::sqrt(5.0), 1e-3);
  EXPECT_EQ(summarize(V{0.8, 0.8, 0.8}).ci_half_width, 0.0);

  std::vector<MetricsReport> reports(5);
  for (std::size_t i = 0; i < 5; ++i) {
    reports[i].mse = v[i];
    reports[i].spearman = 0.5;
  }
  const auto agg = aggregate_folds(reports);
  EXPECT_EQ(agg.k, 5u);
  EXPECT_NEAR(agg.mse.ci_half_width, 1.963, 1e-3);
  EXPECT_EQ(agg.spearman.ci_half_width, 0.0);
  EXPECT_THROW(aggregate_folds({reports[0]}), DataError);
}

TEST(AggregateFolds, UndefinedFoldPropagatesWithFlag) {
  std::vector<MetricsReport> reports(3);
  reports[1].pearson = kUndefined;
  const auto agg = aggregate_folds(reports);
  EXPECT_TRUE(std::isnan(agg.pearson.mean));
  EXPECT_FALSE(agg.flags.empty());
  EXPECT_FALSE(std::isnan(agg.mse.mean));
}
