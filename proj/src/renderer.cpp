#include "debsdf/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "debsdf/errors.hpp"

namespace debsdf {

std::uint64_t ray_stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

RaySampleSet stratified_samples(const Ray& ray, int n, Rng* rng) {
  if (n < 2) throw DomainError("stratified_samples needs n >= 2");
  const double width = (ray.far - ray.near) / n;
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  RaySampleSet set;
  set.t.resize(static_cast<std::size_t>(n));
  set.delta.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng ? jitter(*rng) : 0.5;
    set.t[static_cast<std::size_t>(i)] = ray.near + (i + u) * width;
  }
  for (std::size_t i = 0; i + 1 < set.t.size(); ++i) set.delta[i] = set.t[i + 1] - set.t[i];
  set.delta.back() = width;
  return set;
}

Compositing alpha_transmittance(std::span<const double> sigmas, std::span<const double> deltas) {
  if (sigmas.size() != deltas.size()) throw LengthMismatchError("alpha_transmittance: sigma/delta length mismatch");
  Compositing c;
  c.alpha.resize(sigmas.size());
  c.transmittance.resize(sigmas.size());
  // T_i is carried as 1 − (accumulated opacity) rather than a running product.
  // The two agree to rounding, but this form keeps Σ T_i α_i ≤ 1 exactly in
  // floating point: each weight is at most 1 − opacity.
  double opacity = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    c.transmittance[i] = 1.0 - opacity;
    c.alpha[i] = -std::expm1(-sigmas[i] * deltas[i]);
    opacity += c.transmittance[i] * c.alpha[i];
  }
  return c;
}

std::vector<CurvatureRadius> curvature_along_ray(std::span<const double> t, std::span<const double> s,
                                                 std::span<const Direction> normals, const Direction& v) {
  const std::size_t n = t.size();
  std::vector<CurvatureRadius> a(n, CurvatureRadius::planar());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    CurvatureRadius r = CurvatureRadius::planar();
    try {
      r = estimate_curvature_radius(normals[i], normals[i + 1], v, t[i + 1] - t[i]);
    } catch (const DegenerateError&) {
      r = CurvatureRadius::planar();
    }
    // a = R - s at the first point of the pair.
    a[i] = r.is_planar() ? r : CurvatureRadius::finite(r.value() - s[i]);
  }
  if (n >= 2) a[n - 1] = a[n - 2];
  return a;
}

RenderOutput render_ray(const SdfField& field, const Ray& ray, const DensityConfig& cfg, int n, Rng* rng) {
  cfg.validate();
  const RaySampleSet samples = stratified_samples(ray, n, rng);
  const std::size_t count = samples.t.size();
  const Direction& v = ray.direction;

  std::vector<SdfSample> field_samples;
  field_samples.reserve(count);
  std::vector<double> s(count);
  std::vector<Direction> normals(count);
  for (std::size_t i = 0; i < count; ++i) {
    field_samples.push_back(field.sample(ray.at(samples.t[i])));
    s[i] = field_samples[i].s;
    normals[i] = field_samples[i].n;
  }

  RenderOutput out;
  if (cfg.kind == DensityKind::debsdf)
    out.a = curvature_along_ray(samples.t, s, normals, v);
  else
    out.a.assign(count, CurvatureRadius::planar());

  out.sigma.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    out.sigma[i] = density_of<double>(cfg, s[i], dot(v.vec(), normals[i].vec()), out.a[i]);

  Compositing comp = alpha_transmittance(out.sigma, samples.delta);
  out.alpha = std::move(comp.alpha);
  out.weights.resize(count);
  const bool with_uncertainty = field.has_uncertainty();
  for (std::size_t i = 0; i < count; ++i) {
    const double w = comp.transmittance[i] * out.alpha[i];
    out.weights[i] = w;
    out.opacity += w;
    if (w == 0.0) continue;
    const Point x = ray.at(samples.t[i]);
    out.depth += w * samples.t[i];
    out.normal += normals[i].vec() * w;
    out.color += field.albedo(x) * w;
    if (with_uncertainty) {
      const PointUncertainty u = field.uncertainty(x, v, field_samples[i]);
      out.u_d += w * u.u_d;
      out.v_n += u.v_n * w;
    }
  }
  const int dim = field.dimension();
  double sum = 0.0;
  for (int k = 0; k < dim; ++k) sum += out.v_n[k];
  out.u_n = sum / dim;
  out.t = samples.t;
  return out;
}

std::vector<RenderOutput> render_rays(const SdfField& field, std::span<const Ray> rays, const DensityConfig& cfg, int n,
                                      std::int64_t seed, Exec exec) {
  std::vector<RenderOutput> out(rays.size());
  for_each_index(rays.size(), exec, [&](std::size_t i) {
    if (seed < 0) {
      out[i] = render_ray(field, rays[i], cfg, n, nullptr);
    } else {
      Rng rng(ray_stream_seed(static_cast<std::uint64_t>(seed), i));
      out[i] = render_ray(field, rays[i], cfg, n, &rng);
    }
  });
  return out;
}

WeightProfileStats weight_profile_stats(std::span<const double> weights, std::span<const double> t, double floor_frac) {
  if (weights.size() != t.size()) throw LengthMismatchError("weight_profile_stats: weights/t length mismatch");
  WeightProfileStats stats;
  double max_w = 0.0;
  std::size_t argmax = 0;
  double sum = 0.0;
  double weighted_t = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw DomainError("weights must be non-negative");
    if (weights[i] > max_w) {
      max_w = weights[i];
      argmax = i;
    }
    sum += weights[i];
    weighted_t += weights[i] * t[i];
  }
  if (max_w == 0.0) return stats;
  stats.argmax_t = t[argmax];
  stats.depth_from_weights = weighted_t / sum;

  const double floor = floor_frac * max_w;
  const std::size_t n = weights.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && weights[j + 1] == weights[i]) ++j;  // plateau [i, j]
    const bool left_lower = i == 0 || weights[i - 1] < weights[i];
    const bool right_lower = j + 1 == n || weights[j + 1] < weights[i];
    if (left_lower && right_lower && weights[i] > floor) ++stats.peak_count;
    i = j + 1;
  }
  return stats;
}

}  // namespace debsdf
