#include "debsdf/losses.hpp"

#include <cmath>

namespace debsdf {

void UncertaintyThresholds::validate() const {
  if (!(tau_d > 0.0) || !(tau_n > 0.0) || !(tau_s > 0.0)) throw ValidationError("uncertainty thresholds must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
}

void LossWeights::validate() const {
  if (!(l1 >= 0.0) || !(l2 >= 0.0) || !(l3 >= 0.0) || !(l4 >= 0.0))
    throw ValidationError("loss weights must be non-negative");
}

void PriorObservation::validate() const {
  if (std::abs(norm(normal) - 1.0) > 1e-6) throw ValidationError("prior normal must be unit length");
  if (!std::isfinite(depth)) throw ValidationError("prior depth must be finite");
}

DepthAlignment align_depth(std::span<const double> rendered, std::span<const double> prior) {
  if (rendered.size() != prior.size()) throw LengthMismatchError("align_depth: rendered/prior length mismatch");
  const std::size_t n = prior.size();
  if (n < 2) throw DegenerateError("align_depth needs at least 2 samples");
  double mean_p = 0.0;
  double mean_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_p += prior[i];
    mean_r += rendered[i];
  }
  mean_p /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);
  double var_p = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = prior[i] - mean_p;
    var_p += dp * dp;
    cov += dp * (rendered[i] - mean_r);
  }
  var_p /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  if (var_p < 1e-12) throw DegenerateError("align_depth: prior variance is zero");
  const double w = cov / var_p;
  return {w, mean_r - w * mean_p};
}

double rgb_loss(std::span<const Vec3> c_hat, std::span<const Vec3> c) {
  if (c_hat.size() != c.size()) throw LengthMismatchError("rgb_loss: batch size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (int k = 0; k < 3; ++k) sum += std::abs(c_hat[i][k] - c[i][k]);
  return sum;
}

double eikonal_loss(std::span<const Vec3> gradients) {
  double sum = 0.0;
  for (const Vec3& g : gradients) {
    const double r = norm(g) - 1.0;
    sum += r * r;
  }
  return sum;
}

double smooth_loss(const GradientFn& grad_f, std::span<const Point> ray_points, double a, double tau_s, double xi,
                   std::mt19937_64& rng, std::span<const Point> uniform_points, int dimension) {
  if (!(xi > 0.0)) throw DomainError("smooth_loss jitter stddev must be > 0");
  std::normal_distribution<double> jitter(0.0, xi);
  auto pair_term = [&](const Point& x) {
    Point xe = x;
    for (int k = 0; k < dimension; ++k) xe[k] += jitter(rng);
    return norm(grad_f(x) - grad_f(xe));
  };
  double sum = 0.0;
  // The jitter stream is consumed even when the mask is off, so the draws that
  // follow do not depend on A.
  const double mask = smooth_mask(a, tau_s);
  for (const Point& x : ray_points) sum += mask * pair_term(x);
  for (const Point& x : uniform_points) sum += pair_term(x);
  return sum;
}

double total_loss(const LossParts& p, const LossWeights& w) {
  w.validate();
  const struct {
    const char* name;
    double value;
  } parts[] = {{"rgb", p.rgb}, {"eik", p.eik}, {"smooth", p.smooth}, {"mdepth", p.mdepth}, {"mnormal", p.mnormal}};
  for (const auto& part : parts)
    if (!std::isfinite(part.value)) throw NonFiniteError(std::string("loss term '") + part.name + "' is not finite");
  return p.rgb + w.l1 * p.eik + w.l2 * p.smooth + w.l3 * p.mdepth + w.l4 * p.mnormal;
}

}  // namespace debsdf
