#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpgd/tensor.hpp"

namespace lpgd {

/// Polynomial decay: lr(step) = base_lr * (1 - step/total_steps)^power.
struct LrSchedule {
  double base_lr = 1e-4;
  double power = 0.9;
  int total_steps = 1;
};

inline double poly_lr(const LrSchedule& s, int step) {
  if (step < 0) throw std::invalid_argument("poly_lr: negative step");
  if (s.total_steps < 1) throw std::invalid_argument("poly_lr: total_steps must be >= 1");
  if (step >= s.total_steps) return 0.0;
  return s.base_lr * std::pow(1.0 - static_cast<double>(step) / s.total_steps, s.power);
}

/// Per-parameter Adam moments plus the shared step counter.
struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-6;

  static AdamState init(const std::vector<Tensor>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
      s.m.emplace_back(p.shape());
      s.v.emplace_back(p.shape());
    }
    return s;
  }
};

/// One Adam update from the gradients sitting in each param's grad buffer:
/// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; bias-corrected;
/// p <- p - lr * m_hat / (sqrt(v_hat) + epsilon).
inline void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
  if (params.size() != state.m.size() || params.size() != state.v.size())
    throw std::invalid_argument("adam_step: state holds " + std::to_string(state.m.size()) +
                                " moments for " + std::to_string(params.size()) + " params");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad()) throw std::invalid_argument("adam_step: param without grad buffer");
    if (!same_shape(params[i], state.m[i]) || !same_shape(params[i], state.v[i]))
      throw std::invalid_argument("adam_step: moment shape mismatch at param " + std::to_string(i));
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    float* p = params[i].data();
    const float* g = params[i].grad();
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    for (std::int64_t j = 0, n = params[i].size(); j < n; ++j) {
      const double gj = g[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      p[j] = static_cast<float>(p[j] - lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

}  // namespace lpgd
