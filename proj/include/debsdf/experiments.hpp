#pragma once

// Self-contained numerical experiments shared by the CLI and the acceptance
// suite: toy-ray weight profiles, depth-bias sweeps, the curvature estimator
// check and the finite-difference suite over every loss term.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "debsdf/renderer.hpp"
#include "debsdf/toy_cases.hpp"
#include "debsdf/transform.hpp"

namespace debsdf {

inline constexpr std::array<double, 4> kToyBetas{0.1, 0.05, 0.02, 0.01};
// Peaks below this fraction of the largest weight are ignored.
inline constexpr double kPeakFloor = 0.01;

struct ProfileSample {
  double t = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  double weight = 0.0;
};

struct WeightProfile {
  ToyCase toy = ToyCase::brush_past;
  DensityKind kind = DensityKind::debsdf;
  double beta = 0.0;
  double true_depth = 0.0;
  double depth = 0.0;  // Σ w t
  std::vector<ProfileSample> samples;
  WeightProfileStats stats;
};

// Renders the toy ray at stratum midpoints with kToySamples samples.
WeightProfile weight_profile(ToyCase toy, DensityKind kind, double beta, bool literal_logistic = false);

// Columns: kind,beta,t,sigma,alpha,weight.
std::string weight_profile_csv(std::span<const WeightProfile> profiles);

struct SweepRow {
  DensityKind kind = DensityKind::debsdf;
  double beta = 0.0;
  double depth_error = 0.0;  // |D̂ − d_true|
  int peak_count = 0;
};

// Kinds compared by the sweep, in output order.
inline constexpr std::array<DensityKind, 3> kSweepKinds{DensityKind::laplace, DensityKind::tuvr, DensityKind::debsdf};

// One row per (β, kind), β-major.
std::vector<SweepRow> bias_sweep(ToyCase toy, std::span<const double> betas, bool literal_logistic = false);

// Columns: kind,beta,depth_error,peak_count.
std::string bias_sweep_csv(std::span<const SweepRow> rows);

// Median depth error of `kind` over the rows.
double median_depth_error(std::span<const SweepRow> rows, DensityKind kind);

struct CurvatureRow {
  int dimension = 2;  // 2: circle, 3: sphere
  double radius = 1.0;
  int rays = 0;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
};

// Law-of-Sines estimate vs. the exact normal-section radius on random rays
// approaching circles and spheres of radius 0.1, 1 and 10, with the second
// point d = r/100 further along the ray.
std::vector<CurvatureRow> curvature_check(std::uint64_t seed, int rays = 100);

// Columns: shape,radius,rays,mean_rel_error,max_rel_error.
std::string curvature_csv(std::span<const CurvatureRow> rows);

struct GradCheckRow {
  std::string term;
  int fixtures = 0;
  int checked = 0;              // parameters compared against central differences
  int detached = 0;             // parameters on a detached path
  int detached_nonzero = 0;     // of those, tape gradient not exactly zero
  int non_differentiable = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Every loss term, transformation and the uncertainty head against central
// differences (step 1e-5, relative tolerance `tolerance`) on `fixtures`
// random inputs each.
std::vector<GradCheckRow> grad_check_suite(std::uint64_t seed, int fixtures = 50, double tolerance = 1e-4);

// Columns: term,fixtures,checked,detached,detached_nonzero,non_differentiable,max_rel_error,passed.
std::string grad_check_csv(std::span<const GradCheckRow> rows);

}  // namespace debsdf
