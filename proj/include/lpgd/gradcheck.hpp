#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/autograd.hpp"
#include "lpgd/ops.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

/// A differentiable scalar function of a fixed set of leaf tensors. The loss
/// builder must be pure in the leaf values: calling it with a null tape just
/// re-evaluates the forward pass.
struct GradCheckInstance {
  std::vector<Tensor> params;
  std::function<Tensor(Tape*)> loss;
};

/// Named generator of random instances of one op-under-test.
struct GradCheckCase {
  std::string name;
  std::function<GradCheckInstance(std::mt19937&)> make;
};

/// Max over all leaf elements of |analytic - central difference| divided by
/// max(1, |central difference|). The effective step is recomputed from the
/// stored f32 values so representation rounding of x +- h does not bias the
/// quotient.
inline double gradcheck(const GradCheckInstance& inst, float h = 1e-3f) {
  if (h <= 0.0f) throw std::invalid_argument("gradcheck: h must be positive");
  for (const Tensor& p : inst.params)
    if (!p.requires_grad()) throw std::invalid_argument("gradcheck: all params must require grad");

  for (Tensor p : inst.params) p.zero_grad();
  Tape tape;
  Tensor loss = inst.loss(&tape);
  if (loss.size() != 1) throw std::invalid_argument("gradcheck: loss must be scalar");
  tape.backward(loss);

  double max_err = 0.0;
  for (Tensor p : inst.params) {
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const float keep = p.data()[i];
      p.data()[i] = keep + h;
      const float xp = p.data()[i];
      const double fp = inst.loss(nullptr).value();
      p.data()[i] = keep - h;
      const float xm = p.data()[i];
      const double fm = inst.loss(nullptr).value();
      p.data()[i] = keep;
      const double fd = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
      const double err = std::fabs(static_cast<double>(p.grad()[i]) - fd) / std::max(1.0, std::fabs(fd));
      if (err > max_err) max_err = err;
    }
  }
  return max_err;
}

/// Worst error of a case over `points` freshly sampled instances.
inline double gradcheck(const GradCheckCase& c, int points, unsigned seed, float h = 1e-3f) {
  std::mt19937 rng(seed);
  double max_err = 0.0;
  for (int i = 0; i < points; ++i) max_err = std::max(max_err, gradcheck(c.make(rng), h));
  return max_err;
}

}  // namespace lpgd
