#pragma once

// SDF-to-density transformations.
//
// The scalar templates work for both `double` and `grad::Var`; branch selection
// always happens on values, so the recorded graph is the derivative of the
// branch actually taken.

#include <algorithm>
#include <cmath>
#include <string>

#include "debsdf/curvature_radius.hpp"
#include "debsdf/errors.hpp"
#include "debsdf/grad.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

enum class DensityKind { laplace, logistic, tuvr, debsdf };
enum class BaseDensity { laplace, logistic };

// Floor on the effective cosine |cos θ|^p in both angle-aware mappings.
inline constexpr double kGrazingClamp = 1e-3;
// |a| beyond this multiple of the scene scale is treated as a plane.
inline constexpr double kPlanarRadius = 1e6;
// Estimator returns the planar value when sin α falls below this.
inline constexpr double kMinSinAlpha = 1e-6;

struct DensityConfig {
  DensityKind kind = DensityKind::debsdf;
  double beta = 0.05;
  BaseDensity base = BaseDensity::logistic;  // σ used by the tuvr and debsdf kinds
  double warmup_p = 1.0;
  double scene_scale = 1.0;
  // Literal reproduction of the logistic density with exp(-s/β), which grows
  // with s. Off by default.
  bool literal_logistic = false;

  void validate() const;
};

struct GeometryAtSample {
  double s = 0.0;
  double cos_theta = 1.0;
  CurvatureRadius a = CurvatureRadius::planar();
};

const char* to_string(DensityKind k);
const char* to_string(BaseDensity b);
DensityKind density_kind_from_string(const std::string& s);
BaseDensity base_density_from_string(const std::string& s);

inline void check_beta(double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
}

template <class T>
T density_laplace(const T& s, double beta) {
  using std::exp;
  using grad::exp;
  check_beta(beta);
  const double inv2b = 0.5 / beta;
  if (grad::value_of(s) > 0.0) return inv2b * exp(s * (-1.0 / beta));
  return T(1.0 / beta) - inv2b * exp(s * (1.0 / beta));
}

template <class T>
T density_logistic(const T& s, double beta, bool as_printed = false) {
  using std::exp;
  using grad::exp;
  check_beta(beta);
  // (1/β)·sigmoid(-s/β), written to stay finite for large |s|.
  const double sign = as_printed ? -1.0 : 1.0;
  const T x = s * (sign / beta);
  if (grad::value_of(x) > 0.0) {
    const T e = exp(-x);
    return (1.0 / beta) * e / (1.0 + e);
  }
  return (1.0 / beta) / (1.0 + exp(x));
}

template <class T>
T density_base(BaseDensity base, const T& y, double beta, bool as_printed = false) {
  return base == BaseDensity::laplace ? density_laplace(y, beta) : density_logistic(y, beta, as_printed);
}

template <class T>
T map_tuvr(const T& s, const T& cos_theta) {
  using std::abs;
  using grad::abs;
  const T c = abs(cos_theta);
  if (grad::value_of(c) < kGrazingClamp) return s / kGrazingClamp;
  return s / c;
}

// Bias-aware mapping of SDF value s to the distance y along the ray to the
// locally circular surface of curvature radius a. `a` is a plain value: no
// gradient flows into the curvature estimate.
template <class T>
T map_debsdf(const T& s, const T& cos_theta, const CurvatureRadius& a, double warmup_p, double scene_scale = 1.0) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  using grad::abs;
  using grad::pow;
  using grad::sqrt;
  if (!(warmup_p >= 0.0 && warmup_p <= 1.0)) throw DomainError("warm-up exponent must lie in [0, 1]");
  if (warmup_p == 0.0) return s;

  // Effective cosine c = |cos θ|^p, clamped; sin² follows from sin² + cos² = 1.
  const T abs_cos = abs(cos_theta);
  T c;
  if (grad::value_of(abs_cos) <= std::pow(kGrazingClamp, 1.0 / warmup_p))
    c = T(kGrazingClamp);
  else
    c = warmup_p == 1.0 ? abs_cos : pow(abs_cos, warmup_p);
  if (grad::value_of(c) >= 1.0) return s;  // normal incidence: y = s
  const T sin2 = 1.0 - c * c;

  if (a.is_planar() || std::abs(a.value()) > kPlanarRadius * scene_scale) return s / c;

  const double r = a.value();
  const double sgn = r < 0.0 ? -1.0 : 1.0;
  const T rs = r + s;
  const T sin_abs = sqrt(sin2);
  if (std::abs(r) >= std::abs(grad::value_of(rs)) * grad::value_of(sin_abs)) {
    // Ray meets the circle: y = (a+s)c - sign(a)·sqrt(a² - (a+s)² sin²).
    const T disc = r * r - rs * rs * sin2;
    const T l = grad::value_of(disc) > 1e-24 ? sqrt(disc) : T(0.0);
    // Same value written as s(2a+s) / ((a+s)c + sign(a)·l), free of the
    // cancellation between two nearly equal terms when |a| >> |s|.
    const T den = rs * c + sgn * l;
    if (std::abs(grad::value_of(den)) > 1e-6 * (std::abs(r) + std::abs(grad::value_of(s))))
      return s * (2.0 * r + s) / den;
    return rs * c - sgn * l;
  }
  // No intersection: tangent to a larger circle, y = s/c + s|tan θ|.
  return s / c + s * sin_abs / c;
}

// Law-of-Sines estimate of the normal curvature radius at A from normals at two
// points A, B a distance d apart along direction v. Throws DegenerateError when
// n_B has no component in the plane of (n_A, v).
CurvatureRadius estimate_curvature_radius(const Direction& n_a, const Direction& n_b, const Direction& v, double d);

// p = min(p' · u_d^(1-λ) · u_n^λ, 1).
double warmup_exponent(double p_prime, double u_d, double u_n, double lambda);

double density_of(const DensityConfig& cfg, const GeometryAtSample& g);

template <class T>
T density_of(const DensityConfig& cfg, const T& s, const T& cos_theta, const CurvatureRadius& a) {
  switch (cfg.kind) {
    case DensityKind::laplace:
      return density_laplace(s, cfg.beta);
    case DensityKind::logistic:
      return density_logistic(s, cfg.beta, cfg.literal_logistic);
    case DensityKind::tuvr:
      return density_base(cfg.base, map_tuvr(s, cos_theta), cfg.beta, cfg.literal_logistic);
    case DensityKind::debsdf:
      return density_base(cfg.base, map_debsdf(s, cos_theta, a, cfg.warmup_p, cfg.scene_scale), cfg.beta,
                          cfg.literal_logistic);
  }
  return T(0.0);
}

}  // namespace debsdf
