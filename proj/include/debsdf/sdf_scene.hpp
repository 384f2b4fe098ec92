#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "debsdf/curvature_radius.hpp"
#include "debsdf/field.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

struct Sphere {
  Point center;
  double radius = 1.0;
};

// Half-space boundary; the SDF is positive on the side `normal` points to.
struct Plane {
  Point point;
  Vec3 normal{0.0, 1.0, 0.0};
};

struct Box {
  Point lo;
  Point hi;
};

using Shape = std::variant<Sphere, Plane, Box>;

struct Primitive {
  Shape shape;
  Vec3 albedo{0.5, 0.5, 0.5};
};

struct SurfaceHit {
  double t = 0.0;
  Point point;
  Direction normal;
  std::size_t primitive = 0;
  Vec3 albedo;
};

// Union (hard min) of exact primitive SDFs. In 2D scenes every coordinate has
// z = 0: spheres act as circles, planes as lines and boxes as rectangles.
// Immutable after construction.
class AnalyticScene final : public SdfField {
 public:
  // Distance below which two primitives are considered tied (blend zone).
  static constexpr double kBlendTolerance = 1e-6;

  AnalyticScene(int dimension, std::vector<Primitive> primitives);

  int dimension() const override { return dimension_; }
  const std::vector<Primitive>& primitives() const { return primitives_; }

  double sdf(const Point& p) const;
  // Strict: throws UnsupportedRegionError in blend zones, SingularPointError where
  // the owning primitive's gradient vanishes.
  Direction normal(const Point& p) const;
  CurvatureRadius curvature_radius(const Point& p, const Direction& v) const;

  // Lenient query used by the renderer: ties resolve to the first primitive and
  // singular gradients fall back to +x.
  SdfSample sample(const Point& p) const override;
  Vec3 albedo(const Point& p) const override;

  // Nearest ray-surface intersection in (ray.near, ray.far], by exact per-primitive
  // intersection tests.
  std::optional<SurfaceHit> intersect(const Ray& ray) const;

  // Per-primitive signed distance.
  double primitive_sdf(std::size_t i, const Point& p) const;

 private:
  struct Owner {
    std::size_t index;
    double distance;
    double runner_up;
  };
  Owner owner(const Point& p) const;
  Vec3 primitive_gradient(std::size_t i, const Point& p) const;  // may be zero

  int dimension_;
  std::vector<Primitive> primitives_;
};

// Free-function forms of the scene queries.
double eval_sdf(const AnalyticScene& scene, const Point& p);
Direction eval_normal(const AnalyticScene& scene, const Point& p);
CurvatureRadius analytic_curvature_radius(const AnalyticScene& scene, const Point& p, const Direction& v);

// Parses the scene JSON document; throws ParseError or ValidationError.
AnalyticScene load_scene(std::string_view config_text);
AnalyticScene load_scene_file(const std::string& path);

}  // namespace debsdf
