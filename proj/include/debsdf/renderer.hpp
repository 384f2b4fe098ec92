#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "debsdf/curvature_radius.hpp"
#include "debsdf/field.hpp"
#include "debsdf/parallel.hpp"
#include "debsdf/transform.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

using Rng = std::mt19937_64;

struct RaySampleSet {
  std::vector<double> t;      // strictly ascending, inside [near, far]
  std::vector<double> delta;  // t[i+1] - t[i]; last entry (far - near) / n
};

// One sample per equal-width stratum of [near, far]; stratum midpoints when
// `rng` is null, uniform jitter otherwise.
RaySampleSet stratified_samples(const Ray& ray, int n, Rng* rng = nullptr);

struct Compositing {
  std::vector<double> alpha;
  std::vector<double> transmittance;
};

// α_i = 1 - exp(-σ_i δ_i), T_i = Π_{j<i} (1 - α_j).
Compositing alpha_transmittance(std::span<const double> sigmas, std::span<const double> deltas);

struct RenderOutput {
  Vec3 color;
  double depth = 0.0;
  Vec3 normal;  // composited, not re-normalized
  double u_d = 0.0;
  Vec3 v_n;
  double u_n = 0.0;  // mean of the first `dimension` components of v_n
  double opacity = 0.0;

  std::vector<double> t;
  std::vector<double> sigma;
  std::vector<double> alpha;
  std::vector<double> weights;
  std::vector<CurvatureRadius> a;  // per-sample surface curvature radius (debsdf only)
};

// Curvature radius of the surface at each sample, from the (i, i+1) normal
// pair; the last sample reuses its predecessor's value.
std::vector<CurvatureRadius> curvature_along_ray(std::span<const double> t, std::span<const double> s,
                                                 std::span<const Direction> normals, const Direction& v);

RenderOutput render_ray(const SdfField& field, const Ray& ray, const DensityConfig& cfg, int n, Rng* rng = nullptr);

// Rays are rendered independently; per-ray jitter streams derive from `seed`
// and the ray index, so the result does not depend on the execution policy.
// A negative seed renders stratum midpoints.
std::vector<RenderOutput> render_rays(const SdfField& field, std::span<const Ray> rays, const DensityConfig& cfg, int n,
                                      std::int64_t seed, Exec exec = Exec::parallel);

struct WeightProfileStats {
  int peak_count = 0;
  std::optional<double> argmax_t;  // empty when all weights are zero
  double depth_from_weights = 0.0;  // Σ w t / Σ w
};

// A peak is a strict local maximum (plateaus collapsed) above floor_frac · max.
WeightProfileStats weight_profile_stats(std::span<const double> weights, std::span<const double> t, double floor_frac);

std::uint64_t ray_stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace debsdf
