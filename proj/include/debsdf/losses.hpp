#pragma once

// Loss terms and uncertainty algebra. Scalar terms are templates over `double`
// and `grad::Var`; the detach operation is grad::stop_gradient, which is the
// identity for plain doubles.

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "debsdf/errors.hpp"
#include "debsdf/grad.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

// Floor applied to every uncertainty output before ln or division.
inline constexpr double kUncertaintyFloor = 1e-3;

struct UncertaintyThresholds {
  double tau_d = 0.25;
  double tau_n = 0.4;
  double tau_s = 0.3;
  double lambda = 0.9;

  void validate() const;
};

struct LossWeights {
  double l1 = 0.05;    // eikonal
  double l2 = 0.005;   // smoothness
  double l3 = 0.006;   // masked depth
  double l4 = 0.0025;  // masked normal

  void validate() const;
};

struct PriorObservation {
  double depth = 0.0;  // raw D', before alignment
  Vec3 normal{1.0, 0.0, 0.0};
  bool corrupted = false;  // ground truth, read only by evaluation

  void validate() const;
};

struct DepthAlignment {
  double w = 1.0;
  double q = 0.0;

  double apply(double raw) const { return w * raw + q; }
};

// Least-squares (w, q) minimizing Σ (w·prior + q − rendered)². Throws
// DegenerateError when the prior has (near) zero variance.
DepthAlignment align_depth(std::span<const double> rendered, std::span<const double> prior);

template <class T>
struct MaskedLoss {
  T value;
  bool detached = false;
};

inline void check_uncertainty(double u, const char* what) {
  if (!(u >= kUncertaintyFloor)) throw DomainError(std::string(what) + " is below the uncertainty floor");
}

// ln|U_d| + Ω·|D̂ − D| / |U_d|. When U_d > τ_d the residual is detached, so
// geometry receives no gradient from it while U_d still does.
template <class T>
MaskedLoss<T> masked_depth_loss(const T& u_d, const T& d_hat, const T& d, double tau_d) {
  using std::abs;
  using std::log;
  using grad::abs;
  using grad::log;
  check_uncertainty(grad::value_of(u_d), "U_d");
  const bool detached = grad::value_of(u_d) > tau_d;
  T residual = abs(d_hat - d);
  if (detached) residual = grad::stop_gradient(residual);
  return {log(u_d) + residual / u_d, detached};
}

// ln U_n² + Ω·‖N̂ − N‖₂ / U_n², over the first `n_hat.size()` components.
template <class T>
MaskedLoss<T> masked_normal_loss(const T& u_n, std::span<const T> n_hat, std::span<const double> n, double tau_n) {
  using std::log;
  using std::sqrt;
  using grad::log;
  using grad::sqrt;
  check_uncertainty(grad::value_of(u_n), "U_n");
  if (n_hat.size() != n.size()) throw LengthMismatchError("masked_normal_loss: normal dimension mismatch");
  const bool detached = grad::value_of(u_n) > tau_n;
  T sq = T(0.0);
  for (std::size_t k = 0; k < n.size(); ++k) {
    const T d = n_hat[k] - n[k];
    sq = sq + d * d;
  }
  T residual = sqrt(sq);
  if (detached) residual = grad::stop_gradient(residual);
  const T u2 = u_n * u_n;
  return {log(u2) + residual / u2, detached};
}

// Unmasked prior losses used by the baseline: (D̂ − D)² and
// ‖N̂ − N‖₁ + |1 − N̂·N|.
template <class T>
T depth_prior_loss(const T& d_hat, const T& d) {
  const T r = d_hat - d;
  return r * r;
}

template <class T>
T normal_prior_loss(std::span<const T> n_hat, std::span<const double> n) {
  using std::abs;
  using grad::abs;
  if (n_hat.size() != n.size()) throw LengthMismatchError("normal_prior_loss: normal dimension mismatch");
  T l1 = T(0.0);
  T cosine = T(0.0);
  for (std::size_t k = 0; k < n.size(); ++k) {
    l1 = l1 + abs(n_hat[k] - n[k]);
    cosine = cosine + n_hat[k] * n[k];
  }
  return l1 + abs(1.0 - cosine);
}

// Σ over channels of |Ĉ − C| for one ray.
template <class T>
T rgb_loss(std::span<const T> c_hat, std::span<const double> c) {
  using std::abs;
  using grad::abs;
  if (c_hat.size() != c.size()) throw LengthMismatchError("rgb_loss: channel count mismatch");
  T sum = T(0.0);
  for (std::size_t k = 0; k < c.size(); ++k) sum = sum + abs(c_hat[k] - c[k]);
  return sum;
}

// Batch form: Σ over rays of the per-ray L1.
double rgb_loss(std::span<const Vec3> c_hat, std::span<const Vec3> c);

// (‖g‖₂ − 1)² for one gradient.
template <class T>
T eikonal_term(std::span<const T> g) {
  using std::sqrt;
  using grad::sqrt;
  T sq = T(0.0);
  for (const T& gk : g) sq = sq + gk * gk;
  const T r = sqrt(sq) - 1.0;
  return r * r;
}

double eikonal_loss(std::span<const Vec3> gradients);

// Eq.-17 style mask: 1 when A ≤ τ_s, else 0.
inline double smooth_mask(double a, double tau_s) { return a <= tau_s ? 1.0 : 0.0; }

// ‖g(x) − g(x + ε)‖₂ for one pair of gradients.
template <class T>
T smooth_term(std::span<const T> g, std::span<const T> g_jittered) {
  using std::sqrt;
  using grad::sqrt;
  if (g.size() != g_jittered.size()) throw LengthMismatchError("smooth_term: gradient dimension mismatch");
  T sq = T(0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const T d = g[k] - g_jittered[k];
    sq = sq + d * d;
  }
  return sqrt(sq);
}

using GradientFn = std::function<Vec3(const Point&)>;

// M(A, τ_s)·Σ_{x∈S} ‖∇f(x) − ∇f(x+ε)‖ with ε ~ N(0, ξ) per coordinate in the
// first `dimension` axes, plus the unmasked sum over `uniform_points`.
double smooth_loss(const GradientFn& grad_f, std::span<const Point> ray_points, double a, double tau_s, double xi,
                   std::mt19937_64& rng, std::span<const Point> uniform_points = {}, int dimension = 3);

// A = U_d^(1−λ) · U_n^λ.
template <class T>
T blend_uncertainty(const T& u_d, const T& u_n, double lambda) {
  using std::pow;
  using grad::pow;
  if (!(grad::value_of(u_d) > 0.0) || !(grad::value_of(u_n) > 0.0))
    throw DomainError("blend_uncertainty needs U_d, U_n > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  return pow(u_d, 1.0 - lambda) * pow(u_n, lambda);
}

struct LossParts {
  double rgb = 0.0;
  double eik = 0.0;
  double smooth = 0.0;
  double mdepth = 0.0;
  double mnormal = 0.0;
};

// L = rgb + λ1·eik + λ2·smooth + λ3·Mdepth + λ4·Mnormal. Throws NonFiniteError
// naming the first non-finite part.
double total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace debsdf
