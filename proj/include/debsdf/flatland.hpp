#pragma once

// 2D scenes observed by 1D cameras: experiment configuration and synthetic
// monocular priors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "debsdf/grid_field.hpp"
#include "debsdf/losses.hpp"
#include "debsdf/sdf_scene.hpp"
#include "debsdf/transform.hpp"

namespace debsdf {

struct FlatlandCamera {
  Point center;
  double orientation = 0.0;  // radians, optical axis angle
  double fov = 1.5;          // radians
  int pixels = 64;

  void validate() const;
  Direction pixel_direction(int pixel) const;
};

struct Box2 {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(const Point& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

struct CorruptionSpec {
  Box2 region;
  double views_fraction = 0.0;
  double depth_bias = 0.0;       // scene units added to the true depth
  double normal_rotation = 0.0;  // radians, counter-clockwise

  bool active() const { return views_fraction > 0.0 && (depth_bias != 0.0 || normal_rotation != 0.0); }
};

// Module toggles for ablation runs.
struct Ablation {
  bool filtering = true;       // uf: masked losses with detach
  bool ray_sampling = true;    // rs: uncertainty-proportional ray draws
  bool adaptive_smooth = true; // s: smoothness mask from A
  bool bias_aware = true;      // bias: curvature-aware mapping with warm-up

  static Ablation parse(const std::string& list);  // e.g. "uf,rs"
  std::string to_string() const;
};

struct TrainConfig {
  int steps = 1000;
  int rays_per_step = 64;
  int samples_per_ray = 96;
  double learning_rate = 1e-2;         // SDF and feature grids
  double albedo_learning_rate = 2e-2;
  double head_learning_rate = 3e-3;
  double lr_decay = 0.1;  // multiplier reached at the last step
  double beta = 0.1;         // β at step 0
  double beta_final = 0.01;  // reached geometrically at the last step
  LossWeights weights;
  // Weights of the unmasked prior losses used when filtering is ablated.
  double prior_depth_weight = 0.1;
  double prior_normal_weight = 0.05;
  UncertaintyThresholds thresholds;
  double initial_uncertainty = 0.1;  // head outputs at step 0, below every threshold
  double warmup_frac = 0.2;
  double p_ramp_frac = 0.4;
  double smooth_jitter = 0.02;
  double near_surface_band = 3.0;  // |s| < band·β selects S(r)
  int uniform_points = 128;
  double weight_cutoff = 1e-4;     // samples below this weight skip the head
  std::uint64_t seed = 0;
  GridSpec grid;
  double init_radius = 0.8;
  bool init_inverted = false;  // true when the cameras sit inside the circle
  Ablation ablation;
  bool log_every_step = true;

  void validate() const;
  std::int64_t warmup_steps() const;
  // p' at `step`: 0 through the warm-up gate, then linear to 1 over p_ramp_frac.
  double p_prime(int step) const;
  double beta_at(int step) const;
};

struct ExperimentConfig {
  AnalyticScene scene;
  std::vector<FlatlandCamera> cameras;
  CorruptionSpec corruption;
  TrainConfig train;
  double near = 0.0;
  // Chamfer distances only count contour points inside this box, which keeps
  // the unobserved space behind the walls out of the score.
  Box2 eval_box{-1.05, -1.05, 1.05, 1.05};
};

ExperimentConfig load_experiment(const std::string& text);
ExperimentConfig load_experiment_file(const std::string& path);

struct PixelPrior {
  int view = 0;
  int pixel = 0;
  Ray ray;
  bool hit = false;
  double gt_depth = 0.0;
  Vec3 gt_normal;
  Vec3 gt_color;
  PriorObservation prior;  // prior.depth is the raw D' (affine per view)
};

struct PriorSet {
  std::vector<PixelPrior> pixels;  // view-major
  std::vector<DepthAlignment> view_affine;  // D = w·D' + q recovers the metric prior
  std::vector<bool> view_corrupted;
};

// Ray through `pixel` of `cam`, ending where it leaves the grid domain.
Ray camera_ray(const FlatlandCamera& cam, int pixel, const GridSpec& grid, double near);

PriorSet synth_priors(const AnalyticScene& scene, const std::vector<FlatlandCamera>& cameras,
                      const CorruptionSpec& corruption, const GridSpec& grid, double near, std::uint64_t seed);

}  // namespace debsdf
