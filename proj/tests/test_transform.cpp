#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "debsdf/transform.hpp"

using namespace debsdf;

namespace {

// Exact distance along a ray to a circle of radius r, starting at SDF value s
// with angle θ between the ray and the inward normal: oracle for the
// intersecting branch of the mapping.
double ray_circle_distance(double s, double cos_theta, double r) {
  const double d = r + s;  // distance to the centre
  const double sin2 = 1.0 - cos_theta * cos_theta;
  return d * cos_theta - std::sqrt(r * r - d * d * sin2);
}

}  // namespace

TEST(Transform, LaplaceValues) {
  EXPECT_DOUBLE_EQ(density_laplace(0.0, 0.1), 5.0);
  EXPECT_NEAR(density_laplace(0.1, 0.1), 5.0 * std::exp(-1.0), 1e-14);
  EXPECT_NEAR(density_laplace(-0.1, 0.1), 10.0 - 5.0 * std::exp(-1.0), 1e-14);
}

TEST(Transform, LogisticValuesAndPrintedForm) {
  EXPECT_DOUBLE_EQ(density_logistic(0.0, 0.1), 5.0);
  EXPECT_NEAR(density_logistic(0.2, 0.1), 10.0 / (1.0 + std::exp(2.0)), 1e-13);
  EXPECT_NEAR(density_logistic(0.2, 0.1, true), 10.0 / (1.0 + std::exp(-2.0)), 1e-13);
  EXPECT_TRUE(std::isfinite(density_logistic(1e3, 1e-3)));
  EXPECT_TRUE(std::isfinite(density_logistic(-1e3, 1e-3)));
}

TEST(Transform, BetaMustBePositive) {
  EXPECT_THROW(density_laplace(0.0, 0.0), DomainError);
  EXPECT_THROW(density_logistic(0.0, -1.0), DomainError);
  DensityConfig cfg;
  cfg.beta = 0.0;
  EXPECT_THROW(cfg.validate(), std::exception);
}

TEST(Transform, DensitiesNonIncreasing) {
  for (double beta : {0.01, 0.1, 1.0}) {
    double prev_l = INFINITY, prev_g = INFINITY;
    for (double s = -2.0; s <= 2.0; s += 1e-3) {
      const double l = density_laplace(s, beta);
      const double g = density_logistic(s, beta);
      EXPECT_LE(l, prev_l);
      EXPECT_LE(g, prev_g);
      prev_l = l;
      prev_g = g;
    }
  }
}

TEST(Transform, TuvrMapping) {
  EXPECT_DOUBLE_EQ(map_tuvr(0.3, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(map_tuvr(0.3, -0.5), 0.6);
  EXPECT_DOUBLE_EQ(map_tuvr(0.3, 0.0), 0.3 / kGrazingClamp);
}

TEST(Transform, DebsdfNormalIncidenceIsIdentity) {
  for (double a : {0.01, 1.0, 1e4})
    for (double s : {-0.5, 0.0, 1e-3, 0.7}) EXPECT_NEAR(map_debsdf(s, 1.0, CurvatureRadius::finite(a), 1.0), s, 1e-7);
}

TEST(Transform, DebsdfWarmupEndpoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> us(-1.0, 1.0), uc(-1.0, 1.0), ua(0.05, 5.0);
  for (int k = 0; k < 500; ++k) {
    const double s = us(rng), c = uc(rng);
    EXPECT_EQ(map_debsdf(s, c, CurvatureRadius::finite(ua(rng)), 0.0), s);
    EXPECT_EQ(map_debsdf(s, c, CurvatureRadius::planar(), 1.0), map_tuvr(s, c));
  }
}

TEST(Transform, DebsdfPlanarLimit) {
  const double s = 0.3;
  const double c = std::cos(0.9);
  double prev_err = INFINITY;
  for (double a : {1e3, 1e4, 1e5}) {
    const double err = std::abs(map_debsdf(s, c, CurvatureRadius::finite(a), 1.0) - s / c) / (s / c);
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1e-3);
  // Beyond the planar threshold the mapping is exactly TUVR.
  EXPECT_EQ(map_debsdf(s, c, CurvatureRadius::finite(2 * kPlanarRadius), 1.0), map_tuvr(s, c));
}

TEST(Transform, DebsdfIsExactRayDistanceForCircles) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const double r = 0.1 + 2.0 * u(rng);
    const double s = r * u(rng);
    const double c = 0.05 + 0.95 * u(rng);
    const double sin2 = 1.0 - c * c;
    if (r * r < (r + s) * (r + s) * sin2) continue;  // misses the circle
    EXPECT_NEAR(map_debsdf(s, c, CurvatureRadius::finite(r), 1.0), ray_circle_distance(s, c, r), 1e-10 * (1 + r));
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Transform, DebsdfMissBranchIsTangentForm) {
  const double s = 0.5, r = 0.2, c = 0.3;
  const double sin_t = std::sqrt(1 - c * c);
  ASSERT_LT(r, (r + s) * sin_t);
  EXPECT_NEAR(map_debsdf(s, c, CurvatureRadius::finite(r), 1.0), s / c + s * sin_t / c, 1e-12);
}

TEST(Transform, DebsdfBranchContinuity) {
  // Approach |a| = |a+s|·sinθ from both sides along s for fixed a, θ. The
  // intersect side behaves like sqrt(Δs), hence the tiny probe distance.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double a = 0.1 + 3.0 * u(rng);
    const double sin_t = 0.2 + 0.79 * u(rng);
    const double c = std::sqrt(1.0 - sin_t * sin_t);
    const double s_star = a / sin_t - a;
    const double limit = a * c / sin_t;
    for (double rel : {1e-6, 1e-10, 1e-14}) {
      const double eps = rel * std::max(1.0, s_star);
      const double below = map_debsdf(s_star - eps, c, CurvatureRadius::finite(a), 1.0);
      const double above = map_debsdf(s_star + eps, c, CurvatureRadius::finite(a), 1.0);
      // Square-root approach on the intersect side, linear on the other.
      EXPECT_NEAR(below, limit, 10.0 * std::sqrt(rel) * (1.0 + a) + 1e-6);
      EXPECT_NEAR(above, limit, 10.0 * rel * (1.0 + s_star) / c + 1e-6);
    }
  }
}

TEST(Transform, DebsdfGrazingClamp) {
  const double y = map_debsdf(0.1, 0.0, CurvatureRadius::planar(), 1.0);
  EXPECT_DOUBLE_EQ(y, 0.1 / kGrazingClamp);
  EXPECT_THROW(map_debsdf(0.1, 0.5, CurvatureRadius::planar(), 1.5), DomainError);
}

TEST(Transform, EstimatorExactOnCircle) {
  // Two points along a ray approaching a circle of radius 1 at the origin.
  const double r = 1.0;
  const Point o(-3.0, 0.4, 0.0);
  const Direction v = Direction::from_angle(0.1);
  const double t = 1.0, d = 0.01;
  const Point pa = o + v.vec() * t;
  const Point pb = o + v.vec() * (t + d);
  const CurvatureRadius R = estimate_curvature_radius(Direction::normalize(pa), Direction::normalize(pb), v, d);
  ASSERT_FALSE(R.is_planar());
  EXPECT_NEAR(R.value(), norm(pa), 1e-9);
  EXPECT_NEAR(R.value() - (norm(pa) - r), r, 1e-9);
}

TEST(Transform, EstimatorPlanarAndDegenerate) {
  const Direction n = Direction::from_angle(M_PI / 2);
  EXPECT_TRUE(estimate_curvature_radius(n, n, Direction::from_angle(-1.0), 0.1).is_planar());
  EXPECT_THROW(estimate_curvature_radius(Direction::from_angle(0.0), Direction::normalize({0, 0, 1}),
                                         Direction::from_angle(0.5), 0.1),
               DegenerateError);
  EXPECT_THROW(estimate_curvature_radius(n, n, n, 0.0), DomainError);
}

TEST(Transform, WarmupExponent) {
  EXPECT_DOUBLE_EQ(warmup_exponent(0.0, 0.5, 0.5, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(warmup_exponent(1.0, 1.0, 1.0, 0.9), 1.0);
  EXPECT_DOUBLE_EQ(warmup_exponent(1.0, 4.0, 4.0, 0.9), 1.0);
  EXPECT_NEAR(warmup_exponent(0.5, 0.25, 0.25, 0.9), 0.125, 1e-15);
}

TEST(Transform, DensityOfDispatch) {
  DensityConfig cfg;
  cfg.beta = 0.05;
  const GeometryAtSample g{0.02, 0.6, CurvatureRadius::finite(0.5)};
  cfg.kind = DensityKind::laplace;
  EXPECT_DOUBLE_EQ(density_of(cfg, g), density_laplace(0.02, 0.05));
  cfg.kind = DensityKind::tuvr;
  EXPECT_DOUBLE_EQ(density_of(cfg, g), density_logistic(0.02 / 0.6, 0.05));
  cfg.kind = DensityKind::debsdf;
  EXPECT_DOUBLE_EQ(density_of(cfg, g),
                   density_logistic(map_debsdf(0.02, 0.6, CurvatureRadius::finite(0.5), 1.0), 0.05));
  cfg.warmup_p = 0.0;
  EXPECT_DOUBLE_EQ(density_of(cfg, g), density_logistic(0.02, 0.05));
}

TEST(Transform, KindNames) {
  for (DensityKind k : {DensityKind::laplace, DensityKind::logistic, DensityKind::tuvr, DensityKind::debsdf})
    EXPECT_EQ(density_kind_from_string(to_string(k)), k);
  EXPECT_THROW(density_kind_from_string("neus"), std::exception);
}

TEST(Transform, TapeAgreesWithDoubles) {
  grad::Tape tape;
  const grad::Var s = tape.variable(0.04);
  const grad::Var c = tape.variable(0.7);
  const grad::Var y = map_debsdf(s, c, CurvatureRadius::finite(0.3), 0.8);
  EXPECT_DOUBLE_EQ(y.value(), map_debsdf(0.04, 0.7, CurvatureRadius::finite(0.3), 0.8));
}
