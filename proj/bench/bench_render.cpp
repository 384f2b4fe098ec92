// Serial reference vs. OpenMP path for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "debsdf/recon.hpp"
#include "debsdf/renderer.hpp"
#include "debsdf/sdf_scene.hpp"

using namespace debsdf;

namespace {

const std::string kConfigDir = DEBSDF_CONFIG_DIR;

std::vector<Ray> bench_rays(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Ray> rays;
  for (std::size_t i = 0; i < n; ++i)
    rays.emplace_back(Point(-2.0, 0.5 * u(rng), 0.0), Direction::from_angle(0.3 * u(rng)), 0.0, 4.0);
  return rays;
}

void BM_RenderRays(benchmark::State& state, Exec exec) {
  const AnalyticScene scene(2, {{Sphere{{0.0, 0.0, 0.0}, 0.4}}, {Plane{{0.0, -1.0, 0.0}, {0.0, 1.0, 0.0}}}});
  const std::vector<Ray> rays = bench_rays(static_cast<std::size_t>(state.range(0)));
  DensityConfig cfg;
  cfg.kind = DensityKind::debsdf;
  cfg.beta = 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(render_rays(scene, rays, cfg, 128, 1, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrainSteps(benchmark::State& state, Exec exec) {
  ExperimentConfig exp = load_experiment_file(kConfigDir + "/corrupted.json");
  exp.train.steps = 10;
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  for (auto _ : state) benchmark::DoNotOptimize(train(exp, priors, exec));
  state.SetItemsProcessed(state.iterations() * exp.train.steps);
}

void BM_Evaluate(benchmark::State& state, Exec exec) {
  const ExperimentConfig exp = load_experiment_file(kConfigDir + "/clean.json");
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  TrainedModel model = initial_model(exp.train);
  model.grid.fit_sdf(exp.scene);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, exp, priors, exec));
}

}  // namespace

BENCHMARK_CAPTURE(BM_RenderRays, serial, Exec::serial)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RenderRays, parallel, Exec::parallel)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainSteps, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainSteps, parallel, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, parallel, Exec::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
