#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpgd/autograd.hpp"
#include "lpgd/ops.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

struct LossConfig {
  float lambda = 0.85f;
  float alpha = 10.0f;
  float min_depth = 1e-3f;  // floor applied to pred before the log
};

/// Scalar loss plus the pieces tests want to see. `loss` is the
/// differentiable handle; g/T/D/L are plain values.
struct LossBreakdown {
  Tensor loss;   // scalar, value L
  Tensor g;      // [T] log differences over valid pixels
  std::int64_t T = 0;
  double D = 0.0;
  double L = 0.0;
};

/// Test oracle: Var(g) + (1 - lambda) * mean(g)^2 (population variance).
inline double variance_form(const std::vector<double>& g, double lambda) {
  if (g.empty()) throw std::invalid_argument("variance_form: empty g");
  double s1 = 0.0, s2 = 0.0;
  for (double v : g) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(g.size());
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  return var + (1.0 - lambda) * mean * mean;
}

class SilogLossNode : public Node {
 public:
  SilogLossNode(Tensor pred, Tensor out, std::vector<std::int64_t> idx, std::vector<double> g,
                std::vector<double> clamped_pred, double D, double lambda, double alpha)
      : pred_(std::move(pred)), out_(std::move(out)), idx_(std::move(idx)), g_(std::move(g)),
        clamped_pred_(std::move(clamped_pred)), D_(D), lambda_(lambda), alpha_(alpha) {}

  void backward() override {
    // dL/dD = alpha / (2 sqrt(D)), zeroed below 1e-12 to dodge the sqrt
    // singularity at a perfect fit.
    if (D_ < 1e-12) return;
    const double go = out_.grad()[0];
    const double dL_dD = alpha_ / (2.0 * std::sqrt(D_));
    const double T = static_cast<double>(idx_.size());
    double s1 = 0.0;
    for (double v : g_) s1 += v;
    float* gp = pred_.grad();
    const float* pv = pred_.data();
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      // Clamped pixels have zero slope through the floor.
      if (static_cast<double>(pv[idx_[i]]) < clamped_pred_[i]) continue;
      const double dD_dg = 2.0 * g_[i] / T - 2.0 * lambda_ * s1 / (T * T);
      gp[idx_[i]] += static_cast<float>(go * dL_dD * dD_dg / clamped_pred_[i]);
    }
  }
  const char* name() const override { return "silog_loss"; }

 private:
  Tensor pred_, out_;
  std::vector<std::int64_t> idx_;
  std::vector<double> g_, clamped_pred_;
  double D_, lambda_, alpha_;
};

/// Scale-invariant log loss over valid pixels:
///   g_i = ln(max(pred_i, min_depth)) - ln(gt_i)
///   D   = (1/T) sum g_i^2 - (lambda/T^2) (sum g_i)^2
///   L   = alpha * sqrt(max(D, 0))
/// Differentiable w.r.t. pred; gt and mask are data.
inline LossBreakdown silog_loss(Tape* tape, const Tensor& pred, const Tensor& gt, const Tensor& mask,
                                const LossConfig& cfg = {}) {
  if (!same_shape(pred, gt) || !same_shape(pred, mask))
    throw std::invalid_argument("silog_loss: pred/gt/mask shapes differ: " + shape_str(pred.shape()) + " vs " +
                                shape_str(gt.shape()) + " vs " + shape_str(mask.shape()));
  std::vector<std::int64_t> idx;
  std::vector<double> g, cp;
  idx.reserve(static_cast<std::size_t>(pred.size()));
  double s1 = 0.0, s2 = 0.0;
  for (std::int64_t i = 0; i < pred.size(); ++i) {
    if (mask.data()[i] == 0.0f) continue;
    const double gtv = gt.data()[i];
    if (!(gtv > 0.0)) throw std::invalid_argument("silog_loss: non-positive ground truth inside mask");
    const double p = std::max(static_cast<double>(pred.data()[i]), static_cast<double>(cfg.min_depth));
    const double gi = std::log(p) - std::log(gtv);
    idx.push_back(i);
    g.push_back(gi);
    cp.push_back(p);
    s1 += gi;
    s2 += gi * gi;
  }
  if (idx.empty()) throw std::invalid_argument("silog_loss: mask selects no pixels");

  const double T = static_cast<double>(idx.size());
  const double D = s2 / T - cfg.lambda * (s1 / T) * (s1 / T);
  const double L = cfg.alpha * std::sqrt(std::max(D, 0.0));

  LossBreakdown out;
  out.loss = Tensor::scalar(static_cast<float>(L));
  out.g = Tensor(Shape{static_cast<int>(idx.size())});
  for (std::size_t i = 0; i < g.size(); ++i) out.g.data()[i] = static_cast<float>(g[i]);
  out.T = static_cast<std::int64_t>(idx.size());
  out.D = D;
  out.L = L;
  if (detail::track(tape, {&pred})) {
    out.loss.set_requires_grad(true);
    tape->record<SilogLossNode>(pred, out.loss, std::move(idx), std::move(g), std::move(cp), D,
                                cfg.lambda, cfg.alpha);
  }
  return out;
}

}  // namespace lpgd
