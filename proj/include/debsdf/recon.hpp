#pragma once

// Flatland reconstruction: training loop and evaluation.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "debsdf/contour.hpp"
#include "debsdf/flatland.hpp"
#include "debsdf/grid_field.hpp"
#include "debsdf/parallel.hpp"
#include "debsdf/uncertainty_head.hpp"

namespace debsdf {

struct TrainedModel {
  GridField2D grid;
  UncertaintyHead head;
};

struct StepLog {
  int step = 0;
  double rgb = 0.0;
  double eik = 0.0;
  double smooth = 0.0;
  double mdepth = 0.0;   // prior depth term driving geometry (masked, or unmasked when filtering is off)
  double mnormal = 0.0;
  double detach_fraction_depth = 0.0;
  double detach_fraction_normal = 0.0;
  double total = 0.0;
};

struct TrainResult {
  TrainedModel model;
  std::vector<StepLog> log;
};

TrainedModel initial_model(const TrainConfig& cfg);

// Runs cfg.steps optimization steps. Results are identical for Exec::serial and
// Exec::parallel. Throws NonFiniteError if the loss diverges.
TrainResult train(const ExperimentConfig& exp, const PriorSet& priors, Exec exec = Exec::parallel,
                  const std::function<void(const StepLog&)>& on_step = {});

std::string log_csv(const std::vector<StepLog>& log);

struct SplitMetrics {
  std::size_t pixels = 0;
  double depth_abs_rel = 0.0;
  double normal_cos = 0.0;
  double normal_l1 = 0.0;
};

struct PixelEval {
  int view = 0;
  int pixel = 0;
  double depth = 0.0;
  double gt_depth = 0.0;
  double u_d = 0.0;
  double u_n = 0.0;
  double a = 0.0;  // blend uncertainty
  bool corrupted = false;
};

struct Metrics {
  SplitMetrics all;
  SplitMetrics masked;    // A > τ_s: smoothing switched off
  SplitMetrics unmasked;  // A ≤ τ_s
  std::optional<double> chamfer;
  std::optional<double> chamfer_region;
  std::optional<double> auc;
  double detach_fraction_depth = 0.0;
  double detach_fraction_normal = 0.0;
  std::size_t corrupted_pixels = 0;
};

struct Evaluation {
  Metrics metrics;
  std::vector<PixelEval> pixels;
  std::vector<Polyline> contour;
  std::vector<Polyline> gt_contour;
};

// Lattice size for contour extraction over the grid domain.
inline constexpr int kContourResolution = 481;

Evaluation evaluate(const TrainedModel& model, const ExperimentConfig& exp, const PriorSet& priors,
                    Exec exec = Exec::parallel);

std::string metrics_json(const Metrics& m);
std::string uncertainty_map_csv(const std::vector<PixelEval>& pixels);

}  // namespace debsdf
