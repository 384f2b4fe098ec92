#pragma once

// Volume rendering of one flatland ray through a GridField2D, written once for
// plain values (evaluation) and for tape variables (training).

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "debsdf/grad.hpp"
#include "debsdf/grid_field.hpp"
#include "debsdf/renderer.hpp"
#include "debsdf/transform.hpp"
#include "debsdf/uncertainty_head.hpp"

namespace debsdf::flatland {

using grad::Var;

template <class T>
struct ParamSource;

template <>
struct ParamSource<double> {
  const std::vector<double>& values;

  double combine(std::size_t offset, const std::array<int, 4>& node, const std::array<double, 4>& coef) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += coef[k] * values[offset + static_cast<std::size_t>(node[k])];
    return v;
  }
};

// Leaves are created on first use; `leaves` maps parameter index → leaf.
template <>
struct ParamSource<Var> {
  grad::Tape& tape;
  const std::vector<double>& values;
  std::unordered_map<std::size_t, Var> leaves{};

  Var leaf(std::size_t index) {
    auto it = leaves.find(index);
    if (it != leaves.end()) return it->second;
    const Var v = tape.variable(values[index]);
    leaves.emplace(index, v);
    return v;
  }

  Var combine(std::size_t offset, const std::array<int, 4>& node, const std::array<double, 4>& coef) {
    std::array<Var, 4> vars;
    for (int k = 0; k < 4; ++k) vars[k] = leaf(offset + static_cast<std::size_t>(node[k]));
    return grad::weighted_sum(vars, coef);
  }
};

struct RaySettings {
  double beta = 0.03;
  bool bias_aware = true;
  double p_prime = 0.0;
  double lambda = 0.9;
  double weight_cutoff = 1e-4;
  double transmittance_floor = 1e-5;
  double near_surface_band = 3.0;
  double smooth_jitter = 0.02;
  bool detach_uncertainty_weights = false;  // U accumulates stop_gradient(w)
};

// One evaluation of the head recorded on a tape: outputs are tape nodes whose
// parents are the head inputs; parameter gradients are accumulated by hand.
struct HeadUse {
  UncertaintyHead::Cache cache;
  std::array<Var, UncertaintyHead::kOutputs> outputs{};
};

template <class T>
struct GradientPair {
  std::array<T, 2> g;         // ∇f(x)
  std::array<T, 2> g_jitter;  // ∇f(x + ε)
};

template <class T>
struct RayRender {
  T depth = T(0.0);
  std::array<T, 2> normal{T(0.0), T(0.0)};
  std::array<T, 3> color{T(0.0), T(0.0), T(0.0)};
  T u_d = T(0.0);
  std::array<T, 2> v_n{T(0.0), T(0.0)};
  double opacity = 0.0;
  std::vector<GradientPair<T>> near_surface;
  std::vector<HeadUse> head_uses;
};

inline std::array<double, 8> head_input(std::span<const double> z, const Direction& v, double nx, double ny) {
  return {z[0], z[1], z[2], z[3], v[0], v[1], nx, ny};
}

// Half the samples are stratified over the ray; the other half are placed by
// inverse CDF on the weights of that coarse pass, rendered with a density
// width of at least one coarse interval so thin surfaces are not missed.
inline RaySampleSet two_stage_samples(const GridField2D& grid, const Ray& ray, int n, double beta,
                                      std::mt19937_64* rng) {
  const int n_coarse = std::max(n / 2, 2);
  const int n_fine = n - n_coarse;
  RaySampleSet coarse = stratified_samples(ray, n_coarse, rng);
  if (n_fine <= 0) return coarse;
  const double width = (ray.far - ray.near) / n_coarse;
  const double beta_c = std::max(beta, width);
  std::vector<double> pdf(coarse.t.size());
  double trans = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < coarse.t.size(); ++i) {
    const double sigma = density_logistic(grid.sdf(ray.at(coarse.t[i])), beta_c);
    const double alpha = -std::expm1(-sigma * coarse.delta[i]);
    // A small floor keeps every stratum reachable.
    pdf[i] = trans * alpha + 1e-3;
    total += pdf[i];
    trans *= 1.0 - alpha;
  }
  std::vector<double> t = coarse.t;
  t.reserve(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const double u0 = rng ? jitter(*rng) : 0.5;
  std::size_t bin = 0;
  double acc = pdf[0];
  for (int k = 0; k < n_fine; ++k) {
    const double target = (k + u0) / n_fine * total;
    while (acc < target && bin + 1 < pdf.size()) acc += pdf[++bin];
    // Bin i covers the stratum [near + i·width, near + (i+1)·width].
    const double frac = pdf[bin] > 0.0 ? 1.0 - (acc - target) / pdf[bin] : 0.5;
    t.push_back(ray.near + (static_cast<double>(bin) + std::clamp(frac, 0.0, 1.0)) * width);
  }
  std::sort(t.begin(), t.end());
  RaySampleSet set;
  set.t = std::move(t);
  set.delta.resize(set.t.size());
  for (std::size_t i = 0; i + 1 < set.t.size(); ++i) set.delta[i] = set.t[i + 1] - set.t[i];
  set.delta.back() = std::max(ray.far - set.t.back(), 1e-9);
  return set;
}

template <class T>
RayRender<T> render_flatland_ray(const GridField2D& grid, const UncertaintyHead& head, ParamSource<T>& src,
                                 const Ray& ray, int n, const RaySettings& rs, std::mt19937_64* rng) {
  using std::exp;
  using std::sqrt;
  using grad::exp;
  using grad::sqrt;
  if (grid.spec().features != 4 || head.inputs() != 8) throw ValidationError("flatland head expects 4 features");
  const RaySampleSet samples = two_stage_samples(grid, ray, n, rs.beta, rng);
  const std::size_t count = samples.t.size();
  const Direction& v = ray.direction;
  const std::vector<double>& P = grid.params();

  // Value pass: geometry, curvature, warm-up exponent and transmittance, to
  // find where the ray becomes opaque.
  std::vector<Stencil> st(count);
  std::vector<double> s(count);
  std::vector<Direction> normals(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Point x = ray.at(samples.t[i]);
    st[i] = grid.stencil(x);
    double sv = 0.0, gx = 0.0, gy = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double pv = P[grid.sdf_offset() + static_cast<std::size_t>(st[i].node[k])];
      sv += st[i].w[k] * pv;
      gx += st[i].dwx[k] * pv;
      gy += st[i].dwy[k] * pv;
    }
    s[i] = sv;
    normals[i] = std::hypot(gx, gy) > 1e-12 ? Direction::normalize({gx, gy, 0.0}) : Direction();
  }
  std::vector<CurvatureRadius> a(count, CurvatureRadius::planar());
  if (rs.bias_aware) a = curvature_along_ray(samples.t, s, normals, v);

  std::vector<UncertaintyHead::Cache> caches(count);
  std::vector<double> p_exp(count, 0.0);
  const bool need_head_everywhere = rs.bias_aware && rs.p_prime > 0.0;
  auto features_at = [&](std::size_t i) {
    std::array<double, 4> z{};
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k < 4; ++k) z[c] += st[i].w[k] * P[grid.feature_offset(c) + static_cast<std::size_t>(st[i].node[k])];
    return z;
  };
  std::vector<bool> cached(count, false);
  auto ensure_cache = [&](std::size_t i) {
    if (cached[i]) return;
    const auto z = features_at(i);
    const auto in = head_input(z, v, normals[i][0], normals[i][1]);
    head.eval(in, caches[i]);
    cached[i] = true;
  };

  DensityConfig dc;
  dc.beta = rs.beta;
  dc.base = BaseDensity::logistic;
  dc.kind = rs.bias_aware ? DensityKind::debsdf : DensityKind::logistic;

  std::size_t end = count;
  {
    double trans = 1.0;
    for (std::size_t i = 0; i < count; ++i) {
      if (need_head_everywhere) {
        ensure_cache(i);
        const double u_n = 0.5 * (caches[i].out[1] + caches[i].out[2]);
        p_exp[i] = warmup_exponent(rs.p_prime, caches[i].out[0], u_n, rs.lambda);
      }
      dc.warmup_p = p_exp[i];
      const double sigma = density_of<double>(dc, s[i], dot(v.vec(), normals[i].vec()), a[i]);
      trans *= std::exp(-sigma * samples.delta[i]);
      if (trans < rs.transmittance_floor) {
        end = i + 1;
        break;
      }
    }
  }

  RayRender<T> out;
  std::normal_distribution<double> jitter(0.0, rs.smooth_jitter);
  T trans = T(1.0);
  const double vx = v[0];
  const double vy = v[1];
  for (std::size_t i = 0; i < end; ++i) {
    const Stencil& sti = st[i];
    const T s_t = src.combine(grid.sdf_offset(), sti.node, sti.w);
    const T gx = src.combine(grid.sdf_offset(), sti.node, sti.dwx);
    const T gy = src.combine(grid.sdf_offset(), sti.node, sti.dwy);
    T gn = sqrt(gx * gx + gy * gy);
    if (grad::value_of(gn) < 1e-9) gn = T(1e-9);
    const T nx = gx / gn;
    const T ny = gy / gn;
    const T cos_t = nx * vx + ny * vy;
    dc.warmup_p = p_exp[i];
    const T sigma = density_of<T>(dc, s_t, cos_t, a[i]);
    const T alpha = 1.0 - exp(-(sigma * samples.delta[i]));
    const T w = trans * alpha;
    trans = trans * (1.0 - alpha);
    const double wv = grad::value_of(w);
    out.opacity += wv;

    out.depth = out.depth + w * samples.t[i];
    out.normal[0] = out.normal[0] + w * nx;
    out.normal[1] = out.normal[1] + w * ny;
    for (int c = 0; c < 3; ++c) out.color[c] = out.color[c] + w * src.combine(grid.albedo_offset(c), sti.node, sti.w);

    if (wv >= rs.weight_cutoff) {
      ensure_cache(i);
      const T wu = rs.detach_uncertainty_weights ? grad::stop_gradient(w) : w;
      std::array<T, UncertaintyHead::kOutputs> u;
      if constexpr (std::is_same_v<T, double>) {
        u = caches[i].out;
      } else {
        // Head outputs as tape nodes over its inputs: features and normal.
        HeadUse use;
        use.cache = caches[i];
        std::array<Var, 8> in;
        for (int c = 0; c < 4; ++c) in[c] = src.combine(grid.feature_offset(c), sti.node, sti.w);
        in[4] = Var(vx);
        in[5] = Var(vy);
        in[6] = nx;
        in[7] = ny;
        const std::vector<double> jac = head.input_jacobian(use.cache);
        for (int k = 0; k < UncertaintyHead::kOutputs; ++k) {
          u[k] = src.tape.record(use.cache.out[k], in, std::span<const double>(jac.data() + k * 8, 8));
          use.outputs[k] = u[k];
        }
        out.head_uses.push_back(std::move(use));
      }
      out.u_d = out.u_d + wu * u[0];
      out.v_n[0] = out.v_n[0] + wu * u[1];
      out.v_n[1] = out.v_n[1] + wu * u[2];
    }

    if (std::abs(s[i]) < rs.near_surface_band * rs.beta) {
      GradientPair<T> pair;
      pair.g = {gx, gy};
      Point xe = ray.at(samples.t[i]);
      if (rng) {
        xe.x += jitter(*rng);
        xe.y += jitter(*rng);
      }
      const Stencil se = grid.stencil(xe);
      pair.g_jitter = {src.combine(grid.sdf_offset(), se.node, se.dwx), src.combine(grid.sdf_offset(), se.node, se.dwy)};
      out.near_surface.push_back(pair);
    }
  }
  return out;
}

}  // namespace debsdf::flatland
