#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/autograd.hpp"
#include "lpgd/ops.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

/// Denominator floor for ray-plane intersection; rays closer than this to
/// parallel get a clamped (gradient-free) depth.
constexpr double kDenomEps = 1e-4;

/// Patch-wise normalized pixel coordinates: u[i][j] = (j+0.5)/k,
/// v[i][j] = (i+0.5)/k, row-major, all in (0,1). Constant per k.
struct PatchGrid {
  int k = 0;
  std::vector<double> u, v;  // k*k each, row-major

  static PatchGrid make(int k) {
    if (k < 1) throw std::invalid_argument("PatchGrid: k must be >= 1");
    PatchGrid g;
    g.k = k;
    g.u.resize(static_cast<std::size_t>(k) * k);
    g.v.resize(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        g.u[static_cast<std::size_t>(i) * k + j] = (j + 0.5) / k;
        g.v[static_cast<std::size_t>(i) * k + j] = (i + 0.5) / k;
      }
    return g;
  }
};

/// Spherical parameterization of a unit normal.
inline void angles_to_normal(double theta, double phi, double& n1, double& n2, double& n3) {
  const double st = std::sin(theta);
  n1 = st * std::cos(phi);
  n2 = st * std::sin(phi);
  n3 = std::cos(theta);
}

/// Depth of the ray through normalized pixel (u,v) against the plane
/// (n, n4): n4 / max(n1*u + n2*v + n3, eps).
inline double ray_plane_depth(double n1, double n2, double n3, double n4, double u, double v,
                              double eps = kDenomEps) {
  const double den = n1 * u + n2 * v + n3;
  return n4 / (den > eps ? den : eps);
}

/// Per-cell plane parameters at scale k. theta/phi are raw radians; n4 lies
/// in (0, kappa) by construction (sigmoid * kappa upstream).
struct PlaneCoeffMap {
  Tensor theta, phi, n4;  // each [B,1,Hc,Wc]
  int k = 0;
  float kappa = 0.0f;
};

namespace detail {

struct LpgPartials {
  double c, dth, dph, dn4;
};

/// Depth cue and its partials w.r.t. (theta, phi, n4); partials vanish on the
/// clamped branch except dn4 which keeps its 1/eps factor off (clamp freezes
/// the denominator, the numerator stays live).
inline LpgPartials lpg_point(double theta, double phi, double n4, double u, double v, double eps) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double cp = std::cos(phi), sp = std::sin(phi);
  const double den = st * cp * u + st * sp * v + ct;
  LpgPartials p{};
  if (den > eps) {
    p.c = n4 / den;
    const double dc_dden = -n4 / (den * den);
    p.dth = dc_dden * (ct * cp * u + ct * sp * v - st);
    p.dph = dc_dden * (-st * sp * u + st * cp * v);
    p.dn4 = 1.0 / den;
  } else {
    p.c = n4 / eps;
    p.dth = 0.0;
    p.dph = 0.0;
    p.dn4 = 1.0 / eps;
  }
  return p;
}

}  // namespace detail

class LpgExpandNode : public Node {
 public:
  LpgExpandNode(PlaneCoeffMap coeffs, PatchGrid grid, Tensor out)
      : coeffs_(std::move(coeffs)), grid_(std::move(grid)), out_(std::move(out)) {}

  void backward() override {
    const int B = coeffs_.theta.dim(0), Hc = coeffs_.theta.dim(2), Wc = coeffs_.theta.dim(3);
    const int k = grid_.k, W = Wc * k;
    const float* th = coeffs_.theta.data();
    const float* ph = coeffs_.phi.data();
    const float* n4 = coeffs_.n4.data();
    const float* go = out_.grad();
    float* gth = coeffs_.theta.requires_grad() ? coeffs_.theta.grad() : nullptr;
    float* gph = coeffs_.phi.requires_grad() ? coeffs_.phi.grad() : nullptr;
    float* gn4 = coeffs_.n4.requires_grad() ? coeffs_.n4.grad() : nullptr;
    for (int b = 0; b < B; ++b)
      for (int r = 0; r < Hc; ++r)
        for (int c = 0; c < Wc; ++c) {
          const std::int64_t cell = (static_cast<std::int64_t>(b) * Hc + r) * Wc + c;
          double ath = 0.0, aph = 0.0, an4 = 0.0;
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const std::size_t g = static_cast<std::size_t>(i) * k + j;
              const auto p = detail::lpg_point(th[cell], ph[cell], n4[cell], grid_.u[g], grid_.v[g], kDenomEps);
              const double gv = go[(static_cast<std::int64_t>(b) * Hc * k + (r * k + i)) * W + (c * k + j)];
              ath += gv * p.dth;
              aph += gv * p.dph;
              an4 += gv * p.dn4;
            }
          if (gth) gth[cell] += static_cast<float>(ath);
          if (gph) gph[cell] += static_cast<float>(aph);
          if (gn4) gn4[cell] += static_cast<float>(an4);
        }
  }
  const char* name() const override { return "lpg_expand"; }

 private:
  PlaneCoeffMap coeffs_;
  PatchGrid grid_;
  Tensor out_;
};

/// Expands per-cell plane parameters to a depth-cue map: each coefficient
/// cell generates exactly its own k x k output patch by ray-plane
/// intersection over the patch grid. Internally double, stored f32.
inline Tensor lpg_expand(Tape* tape, const PlaneCoeffMap& coeffs, const PatchGrid& grid) {
  if (grid.k != coeffs.k) throw std::invalid_argument("lpg_expand: grid k != coeffs k");
  if (coeffs.theta.rank() != 4 || !same_shape(coeffs.theta, coeffs.phi) || !same_shape(coeffs.theta, coeffs.n4))
    throw std::invalid_argument("lpg_expand: theta/phi/n4 must share a 4-D shape");
  if (coeffs.theta.dim(1) != 1) throw std::invalid_argument("lpg_expand: coefficient maps must have 1 channel");
  const int B = coeffs.theta.dim(0), Hc = coeffs.theta.dim(2), Wc = coeffs.theta.dim(3);
  const int k = grid.k;
  Tensor out(Shape{B, 1, Hc * k, Wc * k});
  const float* th = coeffs.theta.data();
  const float* ph = coeffs.phi.data();
  const float* n4 = coeffs.n4.data();
  float* o = out.data();
  const int W = Wc * k;
  for (int b = 0; b < B; ++b)
    for (int r = 0; r < Hc; ++r)
      for (int c = 0; c < Wc; ++c) {
        const std::int64_t cell = (static_cast<std::int64_t>(b) * Hc + r) * Wc + c;
        double nn1, nn2, nn3;
        angles_to_normal(th[cell], ph[cell], nn1, nn2, nn3);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const std::size_t g = static_cast<std::size_t>(i) * k + j;
            const double cv = ray_plane_depth(nn1, nn2, nn3, n4[cell], grid.u[g], grid.v[g]);
            o[(static_cast<std::int64_t>(b) * Hc * k + (r * k + i)) * W + (c * k + j)] = static_cast<float>(cv);
          }
      }
  LPGD_DCHECK_FINITE(out, "lpg_expand");
  if (detail::track(tape, {&coeffs.theta, &coeffs.phi, &coeffs.n4})) {
    out.set_requires_grad(true);
    tape->record<LpgExpandNode>(coeffs, grid, out);
  }
  return out;
}

/// 1x1 convolution stack reducing C channels to 3, halving (integer
/// division) until the next halving would drop below 3.
struct ReductionStack {
  std::vector<Tensor> weights;  // [Cout,Cin,1,1]
  std::vector<Tensor> biases;   // [Cout]

  static std::vector<int> layer_widths(int in_channels) {
    if (in_channels < 4) throw std::invalid_argument("ReductionStack: need at least 4 input channels");
    std::vector<int> w{in_channels};
    while (w.back() / 2 >= 3) w.push_back(w.back() / 2);
    w.push_back(3);
    return w;
  }

  static ReductionStack make(int in_channels) {
    const std::vector<int> widths = layer_widths(in_channels);
    ReductionStack s;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      s.weights.emplace_back(Shape{widths[i + 1], widths[i], 1, 1}, true);
      s.biases.emplace_back(Shape{widths[i + 1]}, true);
    }
    return s;
  }
};

/// Reduces a feature map to plane parameters: 1x1 convs with ELU between
/// them down to 3 channels; ch0 -> theta (raw), ch1 -> phi (raw),
/// ch2 -> sigmoid * kappa -> n4.
inline PlaneCoeffMap reduce_to_coeffs(Tape* tape, const Tensor& features, const ReductionStack& stack,
                                      int k, float kappa) {
  if (features.rank() != 4) throw std::invalid_argument("reduce_to_coeffs: features must be 4-D");
  if (features.dim(1) < 4) throw std::invalid_argument("reduce_to_coeffs: need at least 4 channels, got " +
                                                       std::to_string(features.dim(1)));
  Tensor x = features;
  for (std::size_t i = 0; i < stack.weights.size(); ++i) {
    x = conv2d(tape, x, stack.weights[i], &stack.biases[i]);
    if (i + 1 < stack.weights.size()) x = elu(tape, x);
  }
  PlaneCoeffMap m;
  m.theta = slice_channels(tape, x, 0, 1);
  m.phi = slice_channels(tape, x, 1, 2);
  m.n4 = scalar_mul(tape, sigmoid(tape, slice_channels(tape, x, 2, 3)), kappa);
  m.k = k;
  m.kappa = kappa;
  return m;
}

/// Result of fitting plane parameters to one k x k depth patch.
struct PlaneFit {
  double theta = 0.0, phi = 0.0, n4 = 0.0;
  double residual = 0.0;  // RMS of (expanded - patch)
};

struct PlaneFitInit {
  double theta = 0.0, phi = 0.0, n4 = 0.0;
};

namespace detail {

inline double fit_mse(double theta, double phi, double n4, const std::vector<double>& patch,
                      const PatchGrid& grid) {
  double n1, n2, n3;
  angles_to_normal(theta, phi, n1, n2, n3);
  double acc = 0.0;
  for (std::size_t i = 0; i < patch.size(); ++i) {
    const double d = ray_plane_depth(n1, n2, n3, n4, grid.u[i], grid.v[i]) - patch[i];
    acc += d * d;
  }
  return acc / static_cast<double>(patch.size());
}

/// Linear least squares on inverse depth: 1/c = (n1 u + n2 v + n3) / n4 is
/// affine in (u, v), so (a,b,d) = (n1,n2,n3)/n4 solves a 3x3 normal system
/// and the unit-norm constraint recovers n4 = 1/|(a,b,d)|.
inline PlaneFitInit inverse_depth_init(const std::vector<double>& patch, const PatchGrid& grid) {
  double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double rhs[3] = {0, 0, 0};
  for (std::size_t i = 0; i < patch.size(); ++i) {
    const double row[3] = {grid.u[i], grid.v[i], 1.0};
    const double y = 1.0 / patch[i];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A[a][b] += row[a] * row[b];
      rhs[a] += row[a] * y;
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(A[idx[r]][col]) > std::fabs(A[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    const double diag = A[idx[col]][col];
    if (std::fabs(diag) < 1e-30) return {0.0, 0.0, 1.0};  // degenerate; caller refines
    for (int r = col + 1; r < 3; ++r) {
      const double f = A[idx[r]][col] / diag;
      for (int c = col; c < 3; ++c) A[idx[r]][c] -= f * A[idx[col]][c];
      rhs[idx[r]] -= f * rhs[idx[col]];
    }
  }
  double sol[3];
  for (int col = 2; col >= 0; --col) {
    double s = rhs[idx[col]];
    for (int c = col + 1; c < 3; ++c) s -= A[idx[col]][c] * sol[c];
    sol[col] = s / A[idx[col]][col];
  }
  const double norm = std::sqrt(sol[0] * sol[0] + sol[1] * sol[1] + sol[2] * sol[2]);
  if (norm < 1e-30) return {0.0, 0.0, 1.0};
  PlaneFitInit init;
  init.n4 = 1.0 / norm;
  init.theta = std::acos(std::clamp(sol[2] / norm, -1.0, 1.0));
  init.phi = std::atan2(sol[1], sol[0]);
  return init;
}

/// Backtracking gradient descent on the patch MSE, in place. Every accepted
/// step is a strict descent (so the clamped basin, where the objective
/// explodes, is unreachable); the step scale doubles after clean steps and
/// shrinks after backtracks, which carries the iterate through the curved
/// valley that fixed-step descent crawls along. Returns the final MSE.
inline double descend(PlaneFitInit& s, const std::vector<double>& patch, const PatchGrid& grid,
                      int iterations, double lr) {
  const double n = static_cast<double>(patch.size());
  double mse = fit_mse(s.theta, s.phi, s.n4, patch, grid);
  double scale = 1.0;
  for (int it = 0; it < iterations; ++it) {
    double gth = 0.0, gph = 0.0, gn4 = 0.0;
    for (std::size_t i = 0; i < patch.size(); ++i) {
      const auto p = lpg_point(s.theta, s.phi, s.n4, grid.u[i], grid.v[i], kDenomEps);
      const double e = 2.0 * (p.c - patch[i]) / n;
      gth += e * p.dth;
      gph += e * p.dph;
      gn4 += e * p.dn4;
    }
    double step = lr * scale;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      const double th = s.theta - step * gth;
      const double ph = s.phi - step * gph;
      const double n4 = std::max(s.n4 - step * gn4, 1e-6);
      const double trial = fit_mse(th, ph, n4, patch, grid);
      if (trial <= mse) {
        s.theta = th;
        s.phi = ph;
        s.n4 = n4;
        mse = trial;
        moved = true;
        scale = std::clamp(halving == 0 ? scale * 2.0 : scale / (1 << std::min(halving, 30)), 1e-12, 1e12);
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // stationary at every step size
  }
  return mse;
}

}  // namespace detail

/// Gradient-descent fit of (theta, phi, n4) minimizing mean squared error of
/// lpg_expand against the patch. Default init is the closed-form inverse
/// depth least squares, so planar patches land at machine precision and the
/// iterations only polish. A caller-supplied init gets the full iteration
/// budget; if its trajectory ends in a poor stationary point (the landscape
/// is not convex), the fit restarts once from the closed-form init and the
/// better result wins.
inline PlaneFit fit_plane_to_patch(const std::vector<double>& patch, const PatchGrid& grid,
                                   int iterations, double lr,
                                   const std::optional<PlaneFitInit>& init = std::nullopt) {
  if (patch.size() != grid.u.size())
    throw std::invalid_argument("fit_plane_to_patch: patch size " + std::to_string(patch.size()) +
                                " != k*k = " + std::to_string(grid.u.size()));
  double mean = 0.0;
  for (double p : patch) {
    if (!(p > 0.0)) throw std::invalid_argument("fit_plane_to_patch: patch entries must be positive");
    mean += p;
  }
  mean /= static_cast<double>(patch.size());

  PlaneFitInit s = init ? *init : detail::inverse_depth_init(patch, grid);
  double mse = detail::descend(s, patch, grid, iterations, lr);
  if (init && mse > 1e-12 * mean * mean) {
    PlaneFitInit alt = detail::inverse_depth_init(patch, grid);
    const double alt_mse = detail::descend(alt, patch, grid, iterations, lr);
    if (alt_mse < mse) {
      s = alt;
      mse = alt_mse;
    }
  }
  PlaneFit fit;
  fit.theta = s.theta;
  fit.phi = s.phi;
  fit.n4 = s.n4;
  fit.residual = std::sqrt(mse);
  return fit;
}

}  // namespace lpgd
