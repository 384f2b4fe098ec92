#include "debsdf/transform.hpp"

namespace debsdf {

void DensityConfig::validate() const {
  check_beta(beta);
  if (!(warmup_p >= 0.0 && warmup_p <= 1.0)) throw DomainError("warmup_p must lie in [0, 1]");
  if (!(scene_scale > 0.0)) throw DomainError("scene_scale must be > 0");
}

const char* to_string(DensityKind k) {
  switch (k) {
    case DensityKind::laplace:
      return "laplace";
    case DensityKind::logistic:
      return "logistic";
    case DensityKind::tuvr:
      return "tuvr";
    case DensityKind::debsdf:
      return "debsdf";
  }
  return "?";
}

const char* to_string(BaseDensity b) { return b == BaseDensity::laplace ? "laplace" : "logistic"; }

DensityKind density_kind_from_string(const std::string& s) {
  if (s == "laplace") return DensityKind::laplace;
  if (s == "logistic") return DensityKind::logistic;
  if (s == "tuvr") return DensityKind::tuvr;
  if (s == "debsdf") return DensityKind::debsdf;
  throw ValidationError("unknown density kind '" + s + "'");
}

BaseDensity base_density_from_string(const std::string& s) {
  if (s == "laplace") return BaseDensity::laplace;
  if (s == "logistic") return BaseDensity::logistic;
  throw ValidationError("unknown base density '" + s + "'");
}

CurvatureRadius estimate_curvature_radius(const Direction& n_a, const Direction& n_b, const Direction& v, double d) {
  if (!(d > 0.0)) throw DomainError("curvature estimate needs d > 0");
  const Vec3& na = n_a.vec();
  const Vec3& nb = n_b.vec();
  const Vec3& dir = v.vec();

  // Project n_B onto span(n_A, v).
  Vec3 in_plane = na * dot(nb, na);
  Vec3 e2 = dir - na * dot(dir, na);
  const double e2_len = norm(e2);
  if (e2_len > 1e-12) {
    e2 = e2 / e2_len;
    in_plane += e2 * dot(nb, e2);
  }
  const double len = norm(in_plane);
  if (len < 1e-9) throw DegenerateError("n_B is orthogonal to the plane of n_A and the ray");
  const Vec3 nb_proj = in_plane / len;

  const double sin_alpha = norm(cross(na, nb_proj));
  if (sin_alpha < kMinSinAlpha) return CurvatureRadius::planar();
  const double sin_theta_b = norm(cross(nb_proj, dir));
  const double chi = dot(na, dir) <= dot(nb_proj, dir) ? 1.0 : -1.0;
  return CurvatureRadius::finite(chi * d * sin_theta_b / sin_alpha);
}

double warmup_exponent(double p_prime, double u_d, double u_n, double lambda) {
  if (!(u_d > 0.0) || !(u_n > 0.0)) throw DomainError("warm-up uncertainties must be > 0");
  if (!(p_prime >= 0.0)) throw DomainError("p' must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  return std::min(p_prime * std::pow(u_d, 1.0 - lambda) * std::pow(u_n, lambda), 1.0);
}

double density_of(const DensityConfig& cfg, const GeometryAtSample& g) {
  return density_of<double>(cfg, g.s, g.cos_theta, g.a);
}

}  // namespace debsdf
