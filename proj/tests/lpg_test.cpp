#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "lpgd/gradcheck.hpp"
#include "lpgd/lpg.hpp"

namespace {

using lpgd::PatchGrid;
using lpgd::PlaneCoeffMap;
using lpgd::Shape;
using lpgd::Tape;
using lpgd::Tensor;

// Oracle: evaluates the plane directly in Cartesian form, independent of the
// angle parameterization under test.
double plane_depth_oracle(double n1, double n2, double n3, double n4, double u, double v) {
  return n4 / (n1 * u + n2 * v + n3);
}

struct Plane {
  double n1, n2, n3, n4, theta, phi;
};

// Random plane with n3 >= n3_min whose ray denominator stays >= 0.05 over
// the whole unit square (checked at the corners; the denominator is affine
// in (u,v)). Planes violating that have no positive analytic depth to
// reproduce: the clamp takes over.
Plane random_plane(std::mt19937& rng, double n3_min, double kappa) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Plane p{};
  for (;;) {
    do {
      p.n1 = unit(rng);
      p.n2 = unit(rng);
      p.n3 = u01(rng);
    } while (p.n1 * p.n1 + p.n2 * p.n2 + p.n3 * p.n3 > 1.0 || p.n3 < 1e-3);
    const double norm = std::sqrt(p.n1 * p.n1 + p.n2 * p.n2 + p.n3 * p.n3);
    p.n1 /= norm;
    p.n2 /= norm;
    p.n3 /= norm;
    if (p.n3 < n3_min) {
      // Rotate toward the pole: rescale the tangential part.
      const double t = std::sqrt((1.0 - n3_min * n3_min) / (p.n1 * p.n1 + p.n2 * p.n2));
      p.n1 *= t;
      p.n2 *= t;
      p.n3 = n3_min;
    }
    double min_den = 1e30;
    for (int cu = 0; cu <= 1; ++cu)
      for (int cv = 0; cv <= 1; ++cv) min_den = std::min(min_den, p.n1 * cu + p.n2 * cv + p.n3);
    if (min_den >= 0.05) break;
  }
  p.n4 = 0.05 * kappa + 0.9 * kappa * u01(rng);
  p.theta = std::acos(p.n3);
  p.phi = std::atan2(p.n2, p.n1);
  return p;
}

TEST(PatchGrid, HalfPixelCenters) {
  for (int k : {1, 2, 4, 8}) {
    PatchGrid g = PatchGrid::make(k);
    ASSERT_EQ(g.u.size(), static_cast<std::size_t>(k * k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        EXPECT_DOUBLE_EQ(g.u[static_cast<std::size_t>(i) * k + j], (j + 0.5) / k);
        EXPECT_DOUBLE_EQ(g.v[static_cast<std::size_t>(i) * k + j], (i + 0.5) / k);
        EXPECT_GT(g.u[static_cast<std::size_t>(i) * k + j], 0.0);
        EXPECT_LT(g.v[static_cast<std::size_t>(i) * k + j], 1.0);
      }
  }
  EXPECT_THROW(PatchGrid::make(0), std::invalid_argument);
}

TEST(AnglesToNormal, KnownPoints) {
  double n1, n2, n3;
  lpgd::angles_to_normal(0.0, 1.2345, n1, n2, n3);
  EXPECT_NEAR(n1, 0.0, 1e-15);
  EXPECT_NEAR(n2, 0.0, 1e-15);
  EXPECT_NEAR(n3, 1.0, 1e-15);

  const double pi = std::acos(-1.0);
  lpgd::angles_to_normal(pi / 2, 0.0, n1, n2, n3);
  EXPECT_NEAR(n1, 1.0, 1e-15);
  EXPECT_NEAR(n2, 0.0, 1e-15);
  EXPECT_NEAR(n3, 0.0, 1e-15);

  lpgd::angles_to_normal(pi / 3, pi / 4, n1, n2, n3);
  EXPECT_NEAR(n1, 0.61237, 5e-6);
  EXPECT_NEAR(n2, 0.61237, 5e-6);
  EXPECT_NEAR(n3, 0.5, 1e-12);
}

TEST(AnglesToNormal, UnitNormAlways) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double n1, n2, n3;
    lpgd::angles_to_normal(ang(rng), ang(rng), n1, n2, n3);
    worst = std::max(worst, std::fabs(std::sqrt(n1 * n1 + n2 * n2 + n3 * n3) - 1.0));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(RayPlaneDepth, KnownValuesAndClamp) {
  EXPECT_DOUBLE_EQ(lpgd::ray_plane_depth(0, 0, 1, 5.0, 0.123, 0.987), 5.0);
  EXPECT_NEAR(lpgd::ray_plane_depth(0.6, 0, 0.8, 4.0, 0.5, 0.5), 4.0 / 1.1, 1e-12 * (4.0 / 1.1));
  // Ray nearly parallel to the plane: denominator clamps at 1e-4.
  EXPECT_DOUBLE_EQ(lpgd::ray_plane_depth(0, 1, 0, 1.0, 0.5, 1e-9), 1e4);
}

TEST(RayPlaneDepth, MatchesScalarOracleThroughAngles) {
  std::mt19937 rng(17);
  PatchGrid g = PatchGrid::make(2);
  for (int t = 0; t < 200; ++t) {
    Plane p = random_plane(rng, 0.1, 10.0);
    double n1, n2, n3;
    lpgd::angles_to_normal(p.theta, p.phi, n1, n2, n3);
    for (std::size_t i = 0; i < g.u.size(); ++i) {
      const double got = lpgd::ray_plane_depth(n1, n2, n3, p.n4, g.u[i], g.v[i]);
      const double want = plane_depth_oracle(p.n1, p.n2, p.n3, p.n4, g.u[i], g.v[i]);
      EXPECT_NEAR(got, want, 1e-12 * std::fabs(want));
    }
  }
}

TEST(ReductionStack, HalvingWidths) {
  using lpgd::ReductionStack;
  EXPECT_EQ(ReductionStack::layer_widths(16), (std::vector<int>{16, 8, 4, 3}));
  EXPECT_EQ(ReductionStack::layer_widths(4), (std::vector<int>{4, 3}));
  EXPECT_EQ(ReductionStack::layer_widths(64), (std::vector<int>{64, 32, 16, 8, 4, 3}));
  EXPECT_EQ(ReductionStack::layer_widths(65), (std::vector<int>{65, 32, 16, 8, 4, 3}));
  EXPECT_EQ(ReductionStack::layer_widths(33), (std::vector<int>{33, 16, 8, 4, 3}));
  EXPECT_THROW(ReductionStack::layer_widths(3), std::invalid_argument);

  lpgd::ReductionStack s = ReductionStack::make(16);
  ASSERT_EQ(s.weights.size(), 3u);
  EXPECT_EQ(s.weights[0].shape(), (Shape{8, 16, 1, 1}));
  EXPECT_EQ(s.weights[2].shape(), (Shape{3, 4, 1, 1}));
  EXPECT_TRUE(s.weights[0].requires_grad());
}

TEST(ReduceToCoeffs, ZeroWeightsGiveHalfKappa) {
  lpgd::ReductionStack s = lpgd::ReductionStack::make(8);
  Tensor f(Shape{1, 8, 2, 2});
  for (std::int64_t i = 0; i < f.size(); ++i) f.data()[i] = 0.3f * static_cast<float>(i);
  PlaneCoeffMap m = lpgd::reduce_to_coeffs(nullptr, f, s, 4, 10.0f);
  ASSERT_EQ(m.theta.shape(), (Shape{1, 1, 2, 2}));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(m.theta.data()[i], 0.0f);
    EXPECT_EQ(m.phi.data()[i], 0.0f);
    EXPECT_EQ(m.n4.data()[i], 5.0f);  // sigmoid(0) * kappa
  }
  EXPECT_EQ(m.k, 4);

  Tensor tiny(Shape{1, 3, 2, 2});
  EXPECT_THROW(lpgd::reduce_to_coeffs(nullptr, tiny, s, 4, 10.0f), std::invalid_argument);
}

PlaneCoeffMap single_cell(double theta, double phi, double n4, int k, float kappa) {
  PlaneCoeffMap m;
  m.theta = Tensor::full(Shape{1, 1, 1, 1}, static_cast<float>(theta));
  m.phi = Tensor::full(Shape{1, 1, 1, 1}, static_cast<float>(phi));
  m.n4 = Tensor::full(Shape{1, 1, 1, 1}, static_cast<float>(n4));
  m.k = k;
  m.kappa = kappa;
  return m;
}

TEST(LpgExpand, FrontoParallelIsConstant) {
  PatchGrid g = PatchGrid::make(2);
  Tensor out = lpgd::lpg_expand(nullptr, single_cell(0.0, 0.7, 5.0, 2, 10.0f), g);
  ASSERT_EQ(out.shape(), (Shape{1, 1, 2, 2}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out.data()[i], 5.0f);
}

TEST(LpgExpand, ObliquePlaneMatchesOracle) {
  PatchGrid g = PatchGrid::make(2);
  // Known oblique plane 0.6u + 0.8 (n2 = 0).
  const double theta = std::asin(0.6), phi = 0.0, n4 = 4.0;
  Tensor out = lpgd::lpg_expand(nullptr, single_cell(theta, phi, n4, 2, 10.0f), g);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double want = plane_depth_oracle(0.6, 0.0, 0.8, 4.0, g.u[static_cast<std::size_t>(i) * 2 + j],
                                             g.v[static_cast<std::size_t>(i) * 2 + j]);
      // f32 store of float(theta) rounds the parameters first; compare at f32
      // resolution. The double scalar path is checked to 1e-12 separately.
      EXPECT_NEAR(out.at4(0, 0, i, j), want, 1e-6 * want);
    }
}

TEST(LpgExpand, PlanarRoundTrip) {
  std::mt19937 rng(23);
  for (int k : {2, 4, 8}) {
    PatchGrid g = PatchGrid::make(k);
    for (int t = 0; t < 200; ++t) {
      Plane p = random_plane(rng, 0.1, 10.0);
      PlaneCoeffMap m = single_cell(p.theta, p.phi, p.n4, k, 10.0f);
      Tensor out = lpgd::lpg_expand(nullptr, m, g);
      for (std::size_t i = 0; i < g.u.size(); ++i) {
        const double want = plane_depth_oracle(p.n1, p.n2, p.n3, p.n4, g.u[i], g.v[i]);
        EXPECT_NEAR(out.data()[i], want, 1e-5 * std::fabs(want));
      }
    }
  }
}

TEST(LpgExpand, PositiveAndBounded) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<float> ang(-3.2f, 3.2f);
  std::uniform_real_distribution<float> dist(1e-3f, 10.0f);
  const float kappa = 10.0f;
  PatchGrid g = PatchGrid::make(4);
  PlaneCoeffMap m;
  m.theta = Tensor(Shape{2, 1, 3, 3});
  m.phi = Tensor(Shape{2, 1, 3, 3});
  m.n4 = Tensor(Shape{2, 1, 3, 3});
  m.k = 4;
  m.kappa = kappa;
  for (int t = 0; t < 50; ++t) {
    for (std::int64_t i = 0; i < m.theta.size(); ++i) {
      m.theta.data()[i] = ang(rng);
      m.phi.data()[i] = ang(rng);
      m.n4.data()[i] = dist(rng);
    }
    Tensor out = lpgd::lpg_expand(nullptr, m, g);
    for (std::int64_t i = 0; i < out.size(); ++i) {
      ASSERT_GT(out.data()[i], 0.0f);
      ASSERT_LT(out.data()[i], kappa / 1e-4f + 1.0f);
    }
  }
}

TEST(LpgExpand, PatchIndependence) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<float> ang(-1.0f, 1.0f);
  PlaneCoeffMap m;
  m.theta = Tensor(Shape{1, 1, 3, 4});
  m.phi = Tensor(Shape{1, 1, 3, 4});
  m.n4 = Tensor::full(Shape{1, 1, 3, 4}, 5.0f);
  m.k = 4;
  m.kappa = 10.0f;
  for (std::int64_t i = 0; i < m.theta.size(); ++i) {
    m.theta.data()[i] = ang(rng);
    m.phi.data()[i] = ang(rng);
  }
  Tensor base = lpgd::lpg_expand(nullptr, m, PatchGrid::make(4));
  m.theta.data()[5] += 0.25f;  // cell (r=1, c=1)
  Tensor bumped = lpgd::lpg_expand(nullptr, m, PatchGrid::make(4));
  int changed = 0;
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 16; ++c) {
      const bool inside = r / 4 == 1 && c / 4 == 1;
      const bool differs = base.at4(0, 0, r, c) != bumped.at4(0, 0, r, c);
      if (differs) ++changed;
      if (!inside) {
        EXPECT_FALSE(differs) << "leak at " << r << "," << c;
      }
    }
  EXPECT_GT(changed, 0);
}

TEST(LpgExpand, GradcheckAtRandomCells) {
  lpgd::GradCheckCase c{
      "lpg_expand",
      [](std::mt19937& rng) {
        std::uniform_real_distribution<float> th(0.05f, 1.2f);
        std::uniform_real_distribution<float> ph(-3.0f, 3.0f);
        std::uniform_real_distribution<float> n4(1.0f, 9.0f);
        PlaneCoeffMap m;
        m.theta = Tensor(Shape{1, 1, 1, 1}, true);
        m.phi = Tensor(Shape{1, 1, 1, 1}, true);
        m.n4 = Tensor(Shape{1, 1, 1, 1}, true);
        m.k = 4;
        m.kappa = 10.0f;
        // Differentiability holds away from the clamp; keep the denominator
        // clear of it over the whole patch (affine in (u,v), so corner check).
        for (;;) {
          m.theta.data()[0] = th(rng);
          m.phi.data()[0] = ph(rng);
          double n1, n2, n3;
          lpgd::angles_to_normal(m.theta.data()[0], m.phi.data()[0], n1, n2, n3);
          double min_den = 1e30;
          for (int cu = 0; cu <= 1; ++cu)
            for (int cv = 0; cv <= 1; ++cv) min_den = std::min(min_den, n1 * cu + n2 * cv + n3);
          if (min_den >= 0.05) break;
        }
        m.n4.data()[0] = n4(rng);
        lpgd::GradCheckInstance inst;
        inst.params = {m.theta, m.phi, m.n4};
        inst.loss = [m](Tape* tape) {
          Tensor out = lpgd::lpg_expand(tape, m, PatchGrid::make(4));
          return lpgd::scalar_mul(tape, lpgd::sum(tape, out), 1.0f / 16.0f);
        };
        return inst;
      }};
  EXPECT_LT(lpgd::gradcheck(c, 50, 123), 1e-3);
}

TEST(FitPlane, TruthInitIsFixedPoint) {
  std::mt19937 rng(57);
  PatchGrid g = PatchGrid::make(4);
  Plane p = random_plane(rng, 0.2, 10.0);
  std::vector<double> patch(g.u.size());
  for (std::size_t i = 0; i < patch.size(); ++i)
    patch[i] = plane_depth_oracle(p.n1, p.n2, p.n3, p.n4, g.u[i], g.v[i]);
  lpgd::PlaneFitInit init{p.theta, p.phi, p.n4};
  lpgd::PlaneFit fit = lpgd::fit_plane_to_patch(patch, g, 0, 0.05, init);
  EXPECT_LT(fit.residual, 1e-12);
  EXPECT_DOUBLE_EQ(fit.theta, p.theta);
}

TEST(FitPlane, ClosedFormInitNailsPlanarPatches) {
  std::mt19937 rng(59);
  for (int k : {2, 4, 8}) {
    PatchGrid g = PatchGrid::make(k);
    for (int t = 0; t < 50; ++t) {
      Plane p = random_plane(rng, 0.1, 10.0);
      std::vector<double> patch(g.u.size());
      double mean = 0.0;
      for (std::size_t i = 0; i < patch.size(); ++i) {
        patch[i] = plane_depth_oracle(p.n1, p.n2, p.n3, p.n4, g.u[i], g.v[i]);
        mean += patch[i];
      }
      mean /= static_cast<double>(patch.size());
      lpgd::PlaneFit fit = lpgd::fit_plane_to_patch(patch, g, 0, 0.05);
      EXPECT_LT(fit.residual, 1e-9 * mean);
    }
  }
}

TEST(FitPlane, RandomInitConverges) {
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> th(0.0, std::acos(-1.0) / 3.0);
  std::uniform_real_distribution<double> n4d(1.0, 9.0);
  std::uniform_real_distribution<double> ph(-3.0, 3.0);
  PatchGrid g = PatchGrid::make(4);
  for (int t = 0; t < 10; ++t) {
    double theta, phi, n1, n2, n3;
    const double n4 = n4d(rng);
    // Resample until the plane is positive-depth over the patch.
    for (;;) {
      theta = th(rng);
      phi = ph(rng);
      lpgd::angles_to_normal(theta, phi, n1, n2, n3);
      double min_den = 1e30;
      for (int cu = 0; cu <= 1; ++cu)
        for (int cv = 0; cv <= 1; ++cv) min_den = std::min(min_den, n1 * cu + n2 * cv + n3);
      if (min_den >= 0.05) break;
    }
    std::vector<double> patch(g.u.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < patch.size(); ++i) {
      patch[i] = plane_depth_oracle(n1, n2, n3, n4, g.u[i], g.v[i]);
      mean += patch[i];
    }
    mean /= static_cast<double>(patch.size());
    lpgd::PlaneFitInit init{th(rng), ph(rng), n4d(rng)};
    lpgd::PlaneFit fit = lpgd::fit_plane_to_patch(patch, g, 2000, 0.05, init);
    EXPECT_LT(fit.residual, 1e-3 * mean) << "plane " << t;
  }
}

TEST(FitPlane, NoisePatchStillReturns) {
  std::mt19937 rng(67);
  std::uniform_real_distribution<double> d(0.5, 9.5);
  PatchGrid g = PatchGrid::make(4);
  std::vector<double> patch(g.u.size());
  for (double& p : patch) p = d(rng);
  lpgd::PlaneFit fit = lpgd::fit_plane_to_patch(patch, g, 200, 0.05);
  EXPECT_GT(fit.residual, 0.0);

  patch[3] = -1.0;
  EXPECT_THROW(lpgd::fit_plane_to_patch(patch, g, 10, 0.05), std::invalid_argument);
  EXPECT_THROW(lpgd::fit_plane_to_patch(std::vector<double>(3, 1.0), g, 10, 0.05), std::invalid_argument);
}

}  // namespace
