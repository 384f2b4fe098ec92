#include "debsdf/toy_cases.hpp"

#include <string>

#include "debsdf/errors.hpp"

namespace debsdf {

namespace {

constexpr double kPlaneDepth = 2.0;
constexpr double kSphereDepth = 1.0;

}  // namespace

ToyFixture toy_fixture(ToyCase c) {
  const Plane plane{{0.0, 0.0, kPlaneDepth}, {0.0, 0.0, -1.0}};
  Sphere sphere;
  if (c == ToyCase::brush_past) {
    sphere = Sphere{{0.0, 0.1 + 0.15, kSphereDepth}, 0.1};
  } else {
    sphere = Sphere{{0.0, 0.15, kSphereDepth}, 0.3};
  }
  AnalyticScene scene(3, {Primitive{sphere, {0.8, 0.8, 0.8}}, Primitive{plane, {0.3, 0.3, 0.3}}});
  Ray ray({0.0, 0.0, 0.0}, Direction::normalize({0.0, 0.0, 1.0}), 0.0, 3.0);
  const auto hit = scene.intersect(ray);
  if (!hit) throw ValidationError("toy fixture ray misses the scene");
  return ToyFixture{std::move(scene), ray, hit->t};
}

ToyCase toy_case_from_string(std::string_view s) {
  if (s == "a") return ToyCase::brush_past;
  if (s == "b") return ToyCase::sphere_hit;
  throw ValidationError("unknown toy case '" + std::string(s) + "' (expected a or b)");
}

const char* to_string(ToyCase c) { return c == ToyCase::brush_past ? "a" : "b"; }

}  // namespace debsdf
