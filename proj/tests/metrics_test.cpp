#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "lpgd/metrics.hpp"

namespace {

using lpgd::EvalConfig;
using lpgd::MetricsReport;
using lpgd::Shape;
using lpgd::Tensor;

// Oracle: independent naive loop over the metric definitions, same pixel
// order and double accumulation as the contract requires.
MetricsReport metrics_oracle(const Tensor& pred, const Tensor& gt, const Tensor& mask,
                             const EvalConfig& cfg) {
  std::int64_t T = 0;
  double d1 = 0, d2 = 0, d3 = 0, abs_rel = 0, sq_rel = 0, se = 0, sle = 0, l10 = 0;
  for (std::int64_t i = 0; i < pred.size(); ++i) {
    if (mask.defined() && mask.data()[i] == 0.0f) continue;
    const double g = gt.data()[i];
    if (g < cfg.min_cap || g > cfg.max_cap) continue;
    double p = pred.data()[i];
    if (p < cfg.min_cap) p = cfg.min_cap;
    if (p > cfg.max_cap) p = cfg.max_cap;
    ++T;
    const double r = std::max(p / g, g / p);
    if (r < 1.25) d1 += 1;
    if (r < 1.25 * 1.25) d2 += 1;
    if (r < 1.25 * 1.25 * 1.25) d3 += 1;
    abs_rel += std::fabs(p - g) / g;
    sq_rel += (p - g) * (p - g) / g;
    se += (p - g) * (p - g);
    sle += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
    l10 += std::fabs(std::log10(p) - std::log10(g));
  }
  MetricsReport out;
  out.t_count = T;
  out.delta1 = d1 / static_cast<double>(T);
  out.delta2 = d2 / static_cast<double>(T);
  out.delta3 = d3 / static_cast<double>(T);
  out.abs_rel = abs_rel / static_cast<double>(T);
  out.sq_rel = sq_rel / static_cast<double>(T);
  out.rmse = std::sqrt(se / static_cast<double>(T));
  out.rmse_log = std::sqrt(sle / static_cast<double>(T));
  out.log10 = l10 / static_cast<double>(T);
  return out;
}

TEST(Metrics, PerfectPrediction) {
  Tensor gt = Tensor::from_data(Shape{4}, {1.0f, 2.0f, 5.0f, 9.0f});
  MetricsReport r = lpgd::compute_metrics(gt, gt, Tensor(), EvalConfig{1e-3, 10.0});
  EXPECT_EQ(r.t_count, 4);
  EXPECT_EQ(r.delta1, 1.0);
  EXPECT_EQ(r.delta2, 1.0);
  EXPECT_EQ(r.delta3, 1.0);
  EXPECT_EQ(r.abs_rel, 0.0);
  EXPECT_EQ(r.sq_rel, 0.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.rmse_log, 0.0);
  EXPECT_EQ(r.log10, 0.0);
}

TEST(Metrics, UniformThirtyPercentOver) {
  // pred/gt == 13/10 at every pixel with integer-exact f32 inputs, so each
  // per-pixel term is the double 0.3 exactly; summation rounding leaves the
  // mean within a few ulps of 0.3.
  Tensor gt(Shape{1, 1, 8, 8});
  Tensor pred(Shape{1, 1, 8, 8});
  for (int i = 0; i < 64; ++i) {
    const float k = static_cast<float>(1 << (i % 4));
    gt.data()[i] = 10.0f * k;
    pred.data()[i] = 13.0f * k;
  }
  MetricsReport r = lpgd::compute_metrics(pred, gt, Tensor(), EvalConfig{1e-3, 1000.0});
  EXPECT_EQ(r.t_count, 64);
  EXPECT_EQ(r.delta1, 0.0);  // 1.3 > 1.25
  EXPECT_EQ(r.delta2, 1.0);  // 1.3 < 1.5625
  EXPECT_EQ(r.delta3, 1.0);
  EXPECT_NEAR(r.abs_rel, 0.3, 1e-12);
  EXPECT_NEAR(r.log10, 0.11394, 1e-5);
  EXPECT_NEAR(r.rmse_log, 0.26236, 1e-5);
}

TEST(Metrics, CapFiltersGtAndClampsPred) {
  Tensor gt = Tensor::from_data(Shape{2}, {1.0f, 100.0f});
  Tensor pred = Tensor::from_data(Shape{2}, {1.0f, 100.0f});
  MetricsReport r = lpgd::compute_metrics(pred, gt, Tensor(), EvalConfig{0.5, 50.0});
  EXPECT_EQ(r.t_count, 1);  // the gt=100 pixel is out of cap

  Tensor gt2 = Tensor::from_data(Shape{1}, {10.0f});
  Tensor pred2 = Tensor::from_data(Shape{1}, {100.0f});
  MetricsReport r2 = lpgd::compute_metrics(pred2, gt2, Tensor(), EvalConfig{0.5, 50.0});
  EXPECT_DOUBLE_EQ(r2.abs_rel, 4.0);  // pred clamped to 50 before scoring
}

TEST(Metrics, MaskAndErrors) {
  Tensor gt = Tensor::from_data(Shape{3}, {1.0f, 2.0f, 3.0f});
  Tensor pred = Tensor::from_data(Shape{3}, {1.0f, 4.0f, 3.0f});
  Tensor mask = Tensor::from_data(Shape{3}, {1.0f, 0.0f, 1.0f});
  MetricsReport r = lpgd::compute_metrics(pred, gt, mask, EvalConfig{1e-3, 10.0});
  EXPECT_EQ(r.t_count, 2);
  EXPECT_EQ(r.delta1, 1.0);  // the off-by-2x pixel is masked out

  Tensor zero_mask(Shape{3});
  EXPECT_THROW(lpgd::compute_metrics(pred, gt, zero_mask, EvalConfig{1e-3, 10.0}), std::invalid_argument);
  EXPECT_THROW(lpgd::compute_metrics(pred, gt, Tensor(), EvalConfig{10.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(lpgd::compute_metrics(pred, gt, Tensor(), EvalConfig{0.0, 1.0}), std::invalid_argument);
  Tensor other(Shape{4});
  EXPECT_THROW(lpgd::compute_metrics(pred, other, Tensor(), EvalConfig{1e-3, 10.0}), std::invalid_argument);
}

TEST(Metrics, DeltasMonotoneAndSymmetric) {
  std::mt19937 rng(91);
  std::uniform_real_distribution<float> d(0.2f, 9.5f);
  for (int t = 0; t < 50; ++t) {
    Tensor gt(Shape{40});
    Tensor pred(Shape{40});
    for (int i = 0; i < 40; ++i) {
      gt.data()[i] = d(rng);
      pred.data()[i] = d(rng);
    }
    const EvalConfig cfg{1e-3, 10.0};
    MetricsReport r = lpgd::compute_metrics(pred, gt, Tensor(), cfg);
    EXPECT_LE(r.delta1, r.delta2);
    EXPECT_LE(r.delta2, r.delta3);
    MetricsReport s = lpgd::compute_metrics(gt, pred, Tensor(), cfg);
    EXPECT_DOUBLE_EQ(r.delta1, s.delta1);
    EXPECT_DOUBLE_EQ(r.delta2, s.delta2);
    EXPECT_DOUBLE_EQ(r.delta3, s.delta3);
  }
}

TEST(Metrics, AbsRelIsAsymmetric) {
  Tensor gt = Tensor::from_data(Shape{1}, {1.0f});
  Tensor pred = Tensor::from_data(Shape{1}, {2.0f});
  const EvalConfig cfg{1e-3, 10.0};
  EXPECT_DOUBLE_EQ(lpgd::compute_metrics(pred, gt, Tensor(), cfg).abs_rel, 1.0);
  EXPECT_DOUBLE_EQ(lpgd::compute_metrics(gt, pred, Tensor(), cfg).abs_rel, 0.5);
}

TEST(Metrics, MatchesOracleExactly) {
  std::mt19937 rng(97);
  std::uniform_real_distribution<float> d(0.05f, 12.0f);
  std::uniform_real_distribution<float> coin(0.0f, 1.0f);
  for (int t = 0; t < 100; ++t) {
    Tensor gt(Shape{1, 1, 8, 8});
    Tensor pred(Shape{1, 1, 8, 8});
    Tensor mask(Shape{1, 1, 8, 8});
    for (int i = 0; i < 64; ++i) {
      gt.data()[i] = d(rng);
      pred.data()[i] = d(rng);
      mask.data()[i] = coin(rng) < 0.85f ? 1.0f : 0.0f;
    }
    mask.data()[0] = 1.0f;
    gt.data()[0] = 5.0f;  // guarantee one survivor
    const EvalConfig cfg{0.1, 10.0};
    MetricsReport got = lpgd::compute_metrics(pred, gt, mask, cfg);
    MetricsReport want = metrics_oracle(pred, gt, mask, cfg);
    EXPECT_EQ(got.t_count, want.t_count);
    EXPECT_EQ(got.delta1, want.delta1);
    EXPECT_EQ(got.delta2, want.delta2);
    EXPECT_EQ(got.delta3, want.delta3);
    EXPECT_EQ(got.abs_rel, want.abs_rel);
    EXPECT_EQ(got.sq_rel, want.sq_rel);
    EXPECT_EQ(got.rmse, want.rmse);
    EXPECT_EQ(got.rmse_log, want.rmse_log);
    EXPECT_EQ(got.log10, want.log10);
  }
}

TEST(Metrics, TsvRowFormat) {
  Tensor gt = Tensor::from_data(Shape{1}, {2.0f});
  MetricsReport r = lpgd::compute_metrics(gt, gt, Tensor(), EvalConfig{1e-3, 10.0});
  EXPECT_EQ(lpgd::metrics_tsv_header(), "delta1\tdelta2\tdelta3\tabs_rel\tsq_rel\trmse\trmse_log\tlog10\tt_count");
  EXPECT_EQ(lpgd::metrics_tsv_row(r), "1.000000\t1.000000\t1.000000\t0.000000\t0.000000\t0.000000\t0.000000\t0.000000\t1");
}

}  // namespace
