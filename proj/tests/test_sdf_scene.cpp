#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "debsdf/sdf_scene.hpp"

using namespace debsdf;

namespace {

Vec3 fd_gradient(const AnalyticScene& scene, const Point& p, double h = 1e-5) {
  Vec3 g;
  for (int k = 0; k < scene.dimension(); ++k) {
    Point a = p, b = p;
    a[k] += h;
    b[k] -= h;
    g[k] = (eval_sdf(scene, a) - eval_sdf(scene, b)) / (2.0 * h);
  }
  return g;
}

Point random_point(std::mt19937_64& rng, int dim, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  Point p(u(rng), u(rng), 0.0);
  if (dim == 3) p.z = u(rng);
  return p;
}

std::vector<AnalyticScene> single_primitive_scenes() {
  std::vector<AnalyticScene> out;
  for (int dim : {2, 3}) {
    const double z = dim == 3 ? 0.2 : 0.0;
    out.emplace_back(dim, std::vector<Primitive>{{Sphere{{0.1, -0.2, z}, 0.7}}});
    out.emplace_back(dim, std::vector<Primitive>{
                              {Plane{{0.0, 0.3, 0.0}, Direction::normalize({0.6, 0.8, 0.0}).vec()}}});
    out.emplace_back(dim, std::vector<Primitive>{{Box{{-0.4, -0.3, dim == 3 ? -0.5 : 0.0}, {0.5, 0.2, 0.5}}}});
  }
  return out;
}

}  // namespace

TEST(SdfScene, SphereDistanceAndNormal) {
  const AnalyticScene scene(3, {{Sphere{{0, 0, 0}, 1.0}}});
  EXPECT_DOUBLE_EQ(eval_sdf(scene, {2, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_sdf(scene, {0, 0, 0}), -1.0);
  const Direction n = eval_normal(scene, {0, 3, 0});
  EXPECT_DOUBLE_EQ(n[1], 1.0);
}

TEST(SdfScene, PlaneAndBoxDistances) {
  const AnalyticScene plane(2, {{Plane{{0, 1, 0}, {0, 1, 0}}}});
  EXPECT_DOUBLE_EQ(eval_sdf(plane, {5, 3, 0}), 2.0);
  EXPECT_DOUBLE_EQ(eval_sdf(plane, {5, -1, 0}), -2.0);
  const AnalyticScene box(2, {{Box{{-1, -1, 0}, {1, 1, 0}}}});
  EXPECT_DOUBLE_EQ(eval_sdf(box, {3, 0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(eval_sdf(box, {0.5, 0, 0}), -0.5);
  EXPECT_NEAR(eval_sdf(box, {4, 5, 0}), 5.0, 1e-15);
}

TEST(SdfScene, UnionIsHardMin) {
  const AnalyticScene scene(2, {{Sphere{{-2, 0, 0}, 0.5}}, {Sphere{{2, 0, 0}, 0.5}}});
  EXPECT_DOUBLE_EQ(eval_sdf(scene, {-1, 0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(eval_sdf(scene, {2, 1, 0}), 0.5);
  EXPECT_THROW(eval_normal(scene, {0, 0, 0}), UnsupportedRegionError);
}

TEST(SdfScene, ConstructionValidation) {
  EXPECT_THROW(AnalyticScene(2, {}), ValidationError);
  EXPECT_THROW(AnalyticScene(2, {{Sphere{{0, 0, 0}, -1.0}}}), ValidationError);
  EXPECT_THROW(AnalyticScene(4, {{Sphere{{0, 0, 0}, 1.0}}}), ValidationError);
  EXPECT_THROW(AnalyticScene(2, {{Box{{1, 0, 0}, {0, 1, 0}}}}), ValidationError);
  EXPECT_THROW(AnalyticScene(2, {{Plane{{0, 0, 0}, {0, 2, 0}}}}), ValidationError);
}

TEST(SdfScene, SingularPoints) {
  const AnalyticScene scene(3, {{Sphere{{0, 0, 0}, 1.0}}});
  EXPECT_THROW(eval_normal(scene, {0, 0, 0}), SingularPointError);
  EXPECT_THROW(analytic_curvature_radius(scene, {0, 0, 0}, Direction()), SingularPointError);
  // The lenient renderer query never throws.
  EXPECT_NO_THROW(scene.sample({0, 0, 0}));
}

TEST(SdfScene, EikonalPropertyOnSinglePrimitives) {
  std::mt19937_64 rng(7);
  for (const AnalyticScene& scene : single_primitive_scenes()) {
    int checked = 0;
    while (checked < 200) {
      const Point p = random_point(rng, scene.dimension(), 1.5);
      try {
        (void)eval_normal(scene, p);
      } catch (const std::exception&) {
        continue;
      }
      // Skip points within a step of a box medial axis or edge, where the FD stencil straddles a kink.
      const Vec3 g = fd_gradient(scene, p);
      const Vec3 g2 = fd_gradient(scene, p, 2e-5);
      if (norm(g - g2) > 1e-6) continue;
      EXPECT_NEAR(norm(g), 1.0, 1e-4);
      ++checked;
    }
  }
}

TEST(SdfScene, NormalMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (const AnalyticScene& scene : single_primitive_scenes()) {
    int checked = 0;
    while (checked < 200) {
      const Point p = random_point(rng, scene.dimension(), 1.5);
      Direction n;
      try {
        n = eval_normal(scene, p);
      } catch (const std::exception&) {
        continue;
      }
      const Vec3 g = fd_gradient(scene, p);
      if (norm(g - fd_gradient(scene, p, 2e-5)) > 1e-6) continue;
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(n[k], g[k], 1e-4);
      ++checked;
    }
  }
}

TEST(SdfScene, SphereCurvatureIsConstantAlongRay) {
  const double r = 0.6;
  const AnalyticScene scene(3, {{Sphere{{0.2, 0.1, -0.3}, r}}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Point o(u(rng) * 3 + 4, u(rng) * 3, u(rng) * 3);
    const Direction v = Direction::normalize(Point(0.2, 0.1, -0.3) - o + Vec3(u(rng), u(rng), u(rng)) * 0.2);
    for (double t = 0.0; t < 2.0; t += 0.25) {
      const Point p = o + v.vec() * t;
      const double s = eval_sdf(scene, p);
      const CurvatureRadius R = analytic_curvature_radius(scene, p, v);
      ASSERT_FALSE(R.is_planar());
      EXPECT_DOUBLE_EQ(R.value() - s, r);
    }
  }
}

TEST(SdfScene, PlaneCurvatureIsPlanar) {
  const AnalyticScene scene(2, {{Plane{{0, 0, 0}, {0, 1, 0}}}});
  EXPECT_TRUE(analytic_curvature_radius(scene, {0.3, 0.5, 0}, Direction::from_angle(-1.0)).is_planar());
}

TEST(SdfScene, RectangleCornerCurvature) {
  const AnalyticScene scene(2, {{Box{{-1, -1, 0}, {1, 1, 0}}}});
  const Point p(1.3, 1.4, 0.0);
  const CurvatureRadius R = analytic_curvature_radius(scene, p, Direction::from_angle(3.5));
  ASSERT_FALSE(R.is_planar());
  EXPECT_DOUBLE_EQ(R.value(), eval_sdf(scene, p));
}

TEST(SdfScene, IntersectMatchesAnalyticHit) {
  const AnalyticScene scene(2, {{Sphere{{0, 0, 0}, 0.5}}, {Plane{{0, -2, 0}, {0, 1, 0}}}});
  const Ray ray({-3, 0, 0}, Direction::from_angle(0.0), 0.0, 10.0);
  const auto hit = scene.intersect(ray);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 2.5, 1e-12);
  EXPECT_EQ(hit->primitive, 0u);
  EXPECT_NEAR(hit->normal[0], -1.0, 1e-12);

  const Ray down({3, 0, 0}, Direction::from_angle(-M_PI / 2), 0.0, 10.0);
  const auto hit2 = scene.intersect(down);
  ASSERT_TRUE(hit2.has_value());
  EXPECT_NEAR(hit2->t, 2.0, 1e-12);
  EXPECT_EQ(hit2->primitive, 1u);

  const Ray miss({3, 0, 0}, Direction::from_angle(M_PI / 2), 0.0, 10.0);
  EXPECT_FALSE(scene.intersect(miss).has_value());
}

TEST(SdfScene, LoadSceneJson) {
  const AnalyticScene scene = load_scene(R"({"dimension": 2, "primitives": [
      {"sphere": {"center": [0, 0], "radius": 0.5, "albedo": [1, 0, 0]}},
      {"plane": {"point": [0, -1], "normal": [0, 1]}},
      {"box": {"min": [1, 1], "max": [2, 2]}}]})");
  EXPECT_EQ(scene.dimension(), 2);
  ASSERT_EQ(scene.primitives().size(), 3u);
  EXPECT_DOUBLE_EQ(scene.primitives()[0].albedo.x, 1.0);
  EXPECT_DOUBLE_EQ(eval_sdf(scene, {0, 0.9, 0}), 0.4);
}

TEST(SdfScene, LoadSceneRejectsBadInput) {
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": []})"), ValidationError);
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": [{"sphere": {"center": [0, 0], "radius": -1}}]})"),
               ValidationError);
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": [{"torus": {}}]})"), ParseError);
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": [{"sphere": {"center": [0, 0], "radius": 1, "x": 1}}]})"),
               ParseError);
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": [)"), ParseError);
  EXPECT_THROW(load_scene(R"({"dimension": 2, "primitives": [], "extra": 1})"), ParseError);
}
