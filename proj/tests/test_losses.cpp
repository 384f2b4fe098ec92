#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "debsdf/losses.hpp"

using namespace debsdf;
using grad::Tape;
using grad::Var;

TEST(Losses, TotalLossExamples) {
  const LossWeights w;
  EXPECT_DOUBLE_EQ(total_loss({}, w), 0.0);
  EXPECT_NEAR(total_loss({1, 1, 1, 1, 1}, w), 1.0635, 1e-15);
  EXPECT_DOUBLE_EQ(total_loss({0.7, 3, 4, 5, 6}, LossWeights{0, 0, 0, 0}), 0.7);
  EXPECT_THROW(total_loss({0, NAN, 0, 0, 0}, w), NonFiniteError);
}

TEST(Losses, DefaultWeightsAndThresholds) {
  const LossWeights w;
  EXPECT_EQ(w.l1, 0.05);
  EXPECT_EQ(w.l2, 0.005);
  EXPECT_EQ(w.l3, 0.006);
  EXPECT_EQ(w.l4, 0.0025);
  const UncertaintyThresholds th;
  EXPECT_EQ(th.tau_d, 0.25);
  EXPECT_EQ(th.tau_n, 0.4);
  EXPECT_EQ(th.tau_s, 0.3);
  EXPECT_EQ(th.lambda, 0.9);
}

TEST(Losses, MaskedDepthValue) {
  const auto m = masked_depth_loss(0.2, 1.5, 1.2, 0.25);
  EXPECT_FALSE(m.detached);
  EXPECT_NEAR(m.value, std::log(0.2) + 0.3 / 0.2, 1e-14);
  EXPECT_TRUE(masked_depth_loss(0.3, 1.5, 1.2, 0.25).detached);
  EXPECT_THROW(masked_depth_loss(0.0, 1.0, 1.0, 0.25), DomainError);
}

TEST(Losses, DetachCutsGeometryButNotUncertainty) {
  // Above τ_d the geometry gradient is zero while ∂/∂U keeps the residual term.
  Tape tape;
  const Var u = tape.variable(0.5);
  const Var d_hat = tape.variable(2.0);
  const auto m = masked_depth_loss(u, d_hat, Var(1.6), 0.25);
  ASSERT_TRUE(m.detached);
  tape.backward(m.value);
  EXPECT_EQ(tape.adjoint(d_hat), 0.0);
  const double h = 1e-6;
  const double fd = (masked_depth_loss(0.5 + h, 2.0, 1.6, 0.25).value - masked_depth_loss(0.5 - h, 2.0, 1.6, 0.25).value) /
                    (2 * h);
  EXPECT_NEAR(tape.adjoint(u), fd, 1e-8);
  EXPECT_NEAR(tape.adjoint(u), 1.0 / 0.5 - 0.4 / 0.25, 1e-12);
  // The value still depends on geometry.
  EXPECT_NE(masked_depth_loss(0.5, 2.1, 1.6, 0.25).value, masked_depth_loss(0.5, 2.0, 1.6, 0.25).value);
}

TEST(Losses, MaskedNormalDetach) {
  Tape tape;
  const Var u = tape.variable(0.6);
  const std::vector<Var> n_hat{tape.variable(0.8), tape.variable(0.6)};
  const std::vector<double> n{1.0, 0.0};
  const auto m = masked_normal_loss<Var>(u, n_hat, n, 0.4);
  ASSERT_TRUE(m.detached);
  tape.backward(m.value);
  EXPECT_EQ(tape.adjoint(n_hat[0]), 0.0);
  EXPECT_EQ(tape.adjoint(n_hat[1]), 0.0);
  const double r = std::sqrt(0.04 + 0.36);
  EXPECT_NEAR(m.value.value(), std::log(0.36) + r / 0.36, 1e-14);
  EXPECT_NEAR(tape.adjoint(u), 2.0 / 0.6 - 2.0 * r / (0.6 * 0.6 * 0.6), 1e-12);
}

TEST(Losses, UncertaintyOptimumByGradientDescent) {
  // Geometry frozen at residual r; Adam on U with the tape gradient of the masked loss.
  for (double r : {0.1, 1.0, 10.0}) {
    double u = 1.0, m = 0.0, v = 0.0;
    const int steps = 20000;
    for (int it = 1; it <= steps; ++it) {
      Tape tape;
      const Var uv = tape.variable(u);
      const auto loss = masked_depth_loss(uv, Var(1.0 + r), Var(1.0), 1e9);
      tape.backward(loss.value);
      const double g = tape.adjoint(uv);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double lr = 0.05 * std::pow(1e-3, static_cast<double>(it) / steps);
      u -= lr * (m / (1 - std::pow(0.9, it))) / (std::sqrt(v / (1 - std::pow(0.999, it))) + 1e-12);
      u = std::max(u, kUncertaintyFloor);
    }
    EXPECT_NEAR(u, r, 0.01 * r);
  }
}

TEST(Losses, AlignDepthRecoversAffine) {
  std::vector<double> prior, rendered;
  for (int i = 0; i < 20; ++i) {
    prior.push_back(0.3 + 0.1 * i);
    rendered.push_back(2.0 * prior.back() + 3.0);
  }
  const DepthAlignment a = align_depth(rendered, prior);
  EXPECT_NEAR(a.w, 2.0, 1e-12);
  EXPECT_NEAR(a.q, 3.0, 1e-12);
  const DepthAlignment id = align_depth(rendered, rendered);
  EXPECT_NEAR(id.w, 1.0, 1e-10);
  EXPECT_NEAR(id.q, 0.0, 1e-10);
  EXPECT_THROW(align_depth(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 1}), DegenerateError);
  EXPECT_THROW(align_depth(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), LengthMismatchError);
}

TEST(Losses, SmoothMaskIsThreshold) {
  double prev = 1.0;
  for (double a = 0.0; a < 1.0; a += 0.01) {
    const double m = smooth_mask(a, 0.3);
    EXPECT_LE(m, prev);
    prev = m;
  }
  EXPECT_EQ(smooth_mask(0.3, 0.3), 1.0);
  EXPECT_EQ(smooth_mask(0.30001, 0.3), 0.0);
}

TEST(Losses, BlendUncertainty) {
  EXPECT_NEAR(blend_uncertainty(0.2, 0.5, 0.9), std::pow(0.2, 0.1) * std::pow(0.5, 0.9), 1e-15);
  EXPECT_DOUBLE_EQ(blend_uncertainty(0.2, 0.5, 0.0), 0.2);
  EXPECT_DOUBLE_EQ(blend_uncertainty(0.2, 0.5, 1.0), 0.5);
  EXPECT_THROW(blend_uncertainty(0.0, 0.5, 0.9), DomainError);
  EXPECT_THROW(blend_uncertainty(0.2, 0.5, 1.5), DomainError);
}

TEST(Losses, PriorAndRgbTerms) {
  EXPECT_DOUBLE_EQ(depth_prior_loss(1.5, 1.0), 0.25);
  const std::vector<double> n_hat{0.6, 0.8}, n{1.0, 0.0};
  EXPECT_NEAR(normal_prior_loss<double>(n_hat, n), 0.4 + 0.8 + 0.4, 1e-15);
  const std::vector<double> c_hat{0.1, 0.5, 0.9}, c{0.2, 0.5, 0.7};
  EXPECT_NEAR(rgb_loss<double>(c_hat, c), 0.3, 1e-15);
  const std::vector<Vec3> a{{0.1, 0.5, 0.9}, {0, 0, 0}}, b{{0.2, 0.5, 0.7}, {1, 1, 1}};
  EXPECT_NEAR(rgb_loss(a, b), 3.3, 1e-15);
}

TEST(Losses, EikonalLoss) {
  const std::vector<Vec3> unit{{1, 0, 0}, {0.6, 0.8, 0}};
  EXPECT_NEAR(eikonal_loss(unit), 0.0, 1e-15);
  const std::vector<Vec3> doubled{{2, 0, 0}};
  EXPECT_DOUBLE_EQ(eikonal_loss(doubled), 1.0);
}

TEST(Losses, SmoothLossMaskAndUniformPart) {
  const GradientFn constant = [](const Point&) { return Vec3(1, 0, 0); };
  const GradientFn linear = [](const Point& p) { return p; };
  const std::vector<Point> pts{{0, 0, 0}, {0.5, 0.2, 0}};
  std::mt19937_64 rng(1);
  EXPECT_DOUBLE_EQ(smooth_loss(constant, pts, 0.1, 0.3, 0.02, rng, pts, 2), 0.0);
  // Masked off: only the uniform points contribute.
  std::mt19937_64 r1(3), r2(3);
  const double masked = smooth_loss(linear, pts, 0.9, 0.3, 0.02, r1, {}, 2);
  EXPECT_EQ(masked, 0.0);
  const double on = smooth_loss(linear, pts, 0.1, 0.3, 0.02, r2, {}, 2);
  EXPECT_GT(on, 0.0);
}
