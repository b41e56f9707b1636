#pragma once
// Named gradient-check registry: every differentiable op, the plane-to-patch
// expansion (w.r.t. theta, phi, n4), and the scale-invariant log loss end to
// end. Instances are sized so the whole suite runs in seconds.

#include <string>
#include <vector>

#include "lpgd/gradcheck.hpp"
#include "lpgd/loss.hpp"
#include "lpgd/lpg.hpp"
#include "lpgd/ops.hpp"
#include "lpgd/rng.hpp"

namespace lpgd {

inline constexpr double kGradcheckTolerance = 1e-3;

namespace detail {

inline Tensor leaf(std::mt19937& g, const Shape& shape, float lo, float hi) {
  Tensor t(shape);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(uniform(g, lo, hi));
  t.set_requires_grad(true);
  return t;
}

// Smooth projection to a scalar with fixed random weights, so every output
// position carries a distinct gradient.
inline Tensor pick(std::mt19937& g, Tape* tape, const Tensor& x) {
  Tensor w(x.shape());
  for (std::int64_t i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(uniform(g, -1.0, 1.0));
  return sum(tape, mul(tape, x, w));
}

// ELU kinks at zero; keep samples clear of it so central differences stay on
// one branch.
inline Tensor leaf_off_zero(std::mt19937& g, const Shape& shape) {
  Tensor t = leaf(g, shape, 0.1f, 1.5f);
  for (std::int64_t i = 0; i < t.size(); ++i)
    if (uniform(g, 0.0, 1.0) < 0.5) t.data()[i] = -t.data()[i];
  return t;
}

}  // namespace detail

inline std::vector<GradCheckCase> gradcheck_registry() {
  using detail::leaf;
  std::vector<GradCheckCase> cases;

  cases.push_back({"add", [](std::mt19937& g) {
                     Tensor a = leaf(g, {5}, -2.0f, 2.0f), b = leaf(g, {5}, -2.0f, 2.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a, b}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, add(t, a, b));
                                              }};
                   }});
  cases.push_back({"mul", [](std::mt19937& g) {
                     Tensor a = leaf(g, {6}, -2.0f, 2.0f), b = leaf(g, {6}, -2.0f, 2.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a, b}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, mul(t, a, b));
                                              }};
                   }});
  cases.push_back({"scalar_mul", [](std::mt19937& g) {
                     Tensor a = leaf(g, {4}, -2.0f, 2.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, scalar_mul(t, a, 1.7f));
                                              }};
                   }});
  cases.push_back({"scalar_add", [](std::mt19937& g) {
                     Tensor a = leaf(g, {4}, -2.0f, 2.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, scalar_add(t, a, -0.4f));
                                              }};
                   }});
  cases.push_back({"sum", [](std::mt19937& g) {
                     Tensor a = leaf(g, {7}, -2.0f, 2.0f);
                     return GradCheckInstance{{a}, [=](Tape* t) { return sum(t, a); }};
                   }});
  cases.push_back({"elu", [](std::mt19937& g) {
                     Tensor a = detail::leaf_off_zero(g, {2, 3});
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, elu(t, a));
                                              }};
                   }});
  cases.push_back({"sigmoid", [](std::mt19937& g) {
                     Tensor a = leaf(g, {2, 3}, -3.0f, 3.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, sigmoid(t, a));
                                              }};
                   }});
  cases.push_back({"conv2d", [](std::mt19937& g) {
                     Tensor x = leaf(g, {1, 2, 4, 4}, -1.0f, 1.0f);
                     Tensor w = leaf(g, {2, 2, 3, 3}, -0.7f, 0.7f);
                     Tensor b = leaf(g, {2}, -0.5f, 0.5f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{x, w, b}, [=](Tape* t) mutable {
                                                std::mt19937 pw = wg;
                                                return detail::pick(pw, t, conv2d(t, x, w, &b, 1, 1, 1));
                                              }};
                   }});
  cases.push_back({"conv2d_strided_dilated", [](std::mt19937& g) {
                     Tensor x = leaf(g, {1, 1, 6, 6}, -1.0f, 1.0f);
                     Tensor w = leaf(g, {2, 1, 3, 3}, -0.7f, 0.7f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{x, w}, [=](Tape* t) mutable {
                                                std::mt19937 pw = wg;
                                                return detail::pick(pw, t, conv2d(t, x, w, nullptr, 2, 2, 2));
                                              }};
                   }});
  cases.push_back({"nearest_upsample", [](std::mt19937& g) {
                     Tensor x = leaf(g, {1, 2, 2, 2}, -1.0f, 1.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{x}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, nearest_upsample(t, x, 2));
                                              }};
                   }});
  cases.push_back({"downsample_nearest", [](std::mt19937& g) {
                     Tensor x = leaf(g, {1, 2, 4, 4}, -1.0f, 1.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{x}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, downsample_nearest(t, x, 2));
                                              }};
                   }});
  cases.push_back({"concat", [](std::mt19937& g) {
                     Tensor a = leaf(g, {1, 2, 2, 2}, -1.0f, 1.0f);
                     Tensor b = leaf(g, {1, 1, 2, 2}, -1.0f, 1.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a, b}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, concat(t, {a, b}, 1));
                                              }};
                   }});
  cases.push_back({"slice_channels", [](std::mt19937& g) {
                     Tensor a = leaf(g, {1, 3, 2, 2}, -1.0f, 1.0f);
                     std::mt19937 wg(g());
                     return GradCheckInstance{{a}, [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, slice_channels(t, a, 1, 3));
                                              }};
                   }});
  // Plane coefficients -> patch depths, checked w.r.t. theta, phi, and n4.
  // Theta stays small so the patch-ray denominator is far from its clamp, and
  // magnitudes stay near 1 so f32 rounding does not swamp the h = 1e-3
  // central difference.
  cases.push_back({"lpg_expand", [](std::mt19937& g) {
                     const int k = 4;
                     PlaneCoeffMap coeffs;
                     coeffs.theta = leaf(g, {1, 1, 1, 1}, 0.02f, 0.25f);
                     coeffs.phi = leaf(g, {1, 1, 1, 1}, -3.0f, 3.0f);
                     coeffs.n4 = leaf(g, {1, 1, 1, 1}, 0.5f, 2.5f);
                     coeffs.k = k;
                     coeffs.kappa = 10.0f;
                     std::mt19937 wg(g());
                     return GradCheckInstance{{coeffs.theta, coeffs.phi, coeffs.n4},
                                              [=](Tape* t) mutable {
                                                std::mt19937 w = wg;
                                                return detail::pick(w, t, lpg_expand(t, coeffs, PatchGrid::make(k)));
                                              }};
                   }});
  // Prediction -> scale-invariant log loss, the exact training objective.
  cases.push_back({"silog_loss", [](std::mt19937& g) {
                     Tensor pred = leaf(g, {2, 1, 2, 2}, 0.5f, 8.0f);
                     Tensor gt(pred.shape());
                     Tensor mask(pred.shape());
                     for (std::int64_t i = 0; i < gt.size(); ++i) {
                       gt.data()[i] = static_cast<float>(detail::uniform(g, 0.5, 8.0));
                       mask.data()[i] = i < 3 || detail::uniform(g, 0.0, 1.0) < 0.7 ? 1.0f : 0.0f;
                     }
                     return GradCheckInstance{{pred}, [=](Tape* t) {
                                                return silog_loss(t, pred, gt, mask, LossConfig{}).loss;
                                              }};
                   }});
  return cases;
}

struct GradcheckOutcome {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = false;
};

inline std::vector<GradcheckOutcome> run_gradcheck_suite(int points = 100, unsigned seed = 7) {
  std::vector<GradcheckOutcome> out;
  for (const GradCheckCase& c : gradcheck_registry()) {
    const double err = gradcheck(c, points, seed);
    out.push_back({c.name, err, err < kGradcheckTolerance});
  }
  return out;
}

}  // namespace lpgd
