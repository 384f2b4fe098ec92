#pragma once

#include <string_view>

#include "debsdf/sdf_scene.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

// Built-in single-ray fixtures: a small sphere in front of a plane at depth 2.
//   a: the ray passes 0.15 from a sphere of radius 0.1 and hits the plane.
//   b: the ray hits a sphere of radius 0.3 halfway between centre and rim.
// Bump kToyFixtureVersion whenever the geometry changes; goldens depend on it.
inline constexpr int kToyFixtureVersion = 2;
inline constexpr int kToySamples = 256;

enum class ToyCase { brush_past, sphere_hit };

struct ToyFixture {
  AnalyticScene scene;
  Ray ray;
  double true_depth;  // analytic first hit along the ray
};

ToyFixture toy_fixture(ToyCase c);
ToyCase toy_case_from_string(std::string_view s);  // "a" or "b"
const char* to_string(ToyCase c);

}  // namespace debsdf
