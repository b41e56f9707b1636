#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "lpgd/tensor.hpp"

namespace lpgd {

/// Depth cap: pixels whose ground truth lies outside [min_cap, max_cap] are
/// excluded; predictions are clamped into the range before scoring.
struct EvalConfig {
  double min_cap = 1e-3;
  double max_cap = 10.0;
};

struct MetricsReport {
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;  // thresholds 1.25, 1.25^2, 1.25^3
  double abs_rel = 0.0, sq_rel = 0.0, rmse = 0.0, rmse_log = 0.0, log10 = 0.0;
  std::int64_t t_count = 0;
};

/// The six evaluation metrics over the surviving pixel set:
///   delta_k : fraction with max(p/g, g/p) < 1.25^k
///   abs_rel : mean |p - g| / g          sq_rel  : mean (p - g)^2 / g
///   rmse    : sqrt(mean (p - g)^2)      rmse_log: sqrt(mean (ln p - ln g)^2)
///   log10   : mean |log10 p - log10 g|
/// Accumulation is double, in row-major pixel order. An undefined mask
/// treats every pixel as valid.
inline MetricsReport compute_metrics(const Tensor& pred, const Tensor& gt, const Tensor& mask,
                                     const EvalConfig& cfg) {
  if (!(cfg.min_cap > 0.0) || !(cfg.max_cap > cfg.min_cap))
    throw std::invalid_argument("compute_metrics: need 0 < min_cap < max_cap");
  if (!same_shape(pred, gt) || (mask.defined() && !same_shape(pred, mask)))
    throw std::invalid_argument("compute_metrics: pred/gt/mask shapes differ");

  std::int64_t T = 0, d1 = 0, d2 = 0, d3 = 0;
  double s_abs = 0.0, s_sq = 0.0, s_se = 0.0, s_sle = 0.0, s_l10 = 0.0;
  for (std::int64_t i = 0; i < pred.size(); ++i) {
    if (mask.defined() && mask.data()[i] == 0.0f) continue;
    const double g = gt.data()[i];
    if (g < cfg.min_cap || g > cfg.max_cap) continue;
    double p = pred.data()[i];
    if (p < cfg.min_cap) p = cfg.min_cap;
    if (p > cfg.max_cap) p = cfg.max_cap;
    ++T;
    const double ratio = std::max(p / g, g / p);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.5625) ++d2;
    if (ratio < 1.953125) ++d3;
    s_abs += std::fabs(p - g) / g;
    s_sq += (p - g) * (p - g) / g;
    s_se += (p - g) * (p - g);
    s_sle += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
    s_l10 += std::fabs(std::log10(p) - std::log10(g));
  }
  if (T == 0) throw std::invalid_argument("compute_metrics: no pixel survives mask and cap");

  MetricsReport r;
  const double n = static_cast<double>(T);
  r.delta1 = static_cast<double>(d1) / n;
  r.delta2 = static_cast<double>(d2) / n;
  r.delta3 = static_cast<double>(d3) / n;
  r.abs_rel = s_abs / n;
  r.sq_rel = s_sq / n;
  r.rmse = std::sqrt(s_se / n);
  r.rmse_log = std::sqrt(s_sle / n);
  r.log10 = s_l10 / n;
  r.t_count = T;
  return r;
}

inline std::string metrics_tsv_header() {
  return "delta1\tdelta2\tdelta3\tabs_rel\tsq_rel\trmse\trmse_log\tlog10\tt_count";
}

inline std::string metrics_tsv_row(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%lld",
                r.delta1, r.delta2, r.delta3, r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.log10,
                static_cast<long long>(r.t_count));
  return buf;
}

}  // namespace lpgd
