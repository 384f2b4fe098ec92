#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "debsdf/contour.hpp"
#include "debsdf/recon.hpp"

using namespace debsdf;

namespace {

const std::string kConfigDir = DEBSDF_CONFIG_DIR;

ExperimentConfig small_experiment(const std::string& name, int steps) {
  ExperimentConfig exp = load_experiment_file(kConfigDir + "/" + name);
  exp.train.steps = steps;
  exp.train.rays_per_step = 16;
  exp.train.samples_per_ray = 48;
  exp.train.uniform_points = 16;
  return exp;
}

}  // namespace

TEST(GridField, BilinearReproducesLinearFunctions) {
  GridSpec spec;
  spec.nodes = 9;
  GridField2D g(spec);
  for (int n = 0; n < g.node_count(); ++n) {
    const Point p = g.node_position(n);
    g.params()[g.sdf_offset() + static_cast<std::size_t>(n)] = 0.3 * p.x - 0.7 * p.y + 0.1;
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(spec.lo, spec.hi);
  for (int k = 0; k < 100; ++k) {
    const Point p(u(rng), u(rng), 0.0);
    EXPECT_NEAR(g.sdf(p), 0.3 * p.x - 0.7 * p.y + 0.1, 1e-12);
    const Vec3 grad = g.gradient(p);
    EXPECT_NEAR(grad.x, 0.3, 1e-12);
    EXPECT_NEAR(grad.y, -0.7, 1e-12);
  }
}

TEST(GridField, StencilWeightsPartitionUnity) {
  GridField2D g;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 100; ++k) {
    const Stencil st = g.stencil({u(rng), u(rng), 0.0});
    double sum = 0.0, dx = 0.0, dy = 0.0;
    for (int j = 0; j < 4; ++j) {
      sum += st.w[j];
      dx += st.dwx[j];
      dy += st.dwy[j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(dx, 0.0, 1e-12);
    EXPECT_NEAR(dy, 0.0, 1e-12);
  }
}

TEST(GridField, CircleInitAndFit) {
  GridField2D g;
  g.init_circle({0, 0, 0}, 0.8, false);
  // The cone apex falls between nodes, so allow one grid spacing.
  EXPECT_NEAR(g.sdf({0.0, 0.0, 0.0}), -0.8, g.spec().spacing());
  g.init_circle({0, 0, 0}, 0.8, true);
  EXPECT_GT(g.sdf({0.0, 0.0, 0.0}), 0.7);
  const AnalyticScene scene(2, {{Sphere{{0.1, 0.2, 0.0}, 0.5}}});
  g.fit_sdf(scene);
  EXPECT_NEAR(g.sdf({0.6, 0.2, 0.0}), 0.0, 2e-3);
}

TEST(GridField, Validation) {
  GridSpec spec;
  spec.nodes = 1;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(UncertaintyHead, OutputsAboveFloorAndInitialValue) {
  UncertaintyHead head(8, 16);
  head.init(3, 0.1);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> in(8);
    for (double& x : in) x = 0.1 * u(rng);
    for (double out : head.eval(in)) {
      EXPECT_GE(out, kUncertaintyFloor);
      EXPECT_NEAR(out, 0.1, 0.05);
    }
  }
}

TEST(UncertaintyHead, JacobiansMatchFiniteDifferences) {
  UncertaintyHead head(5, 7);
  head.init(9, 0.5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& p : head.params()) p += 0.3 * u(rng);
  std::vector<double> in(5);
  for (double& x : in) x = u(rng);
  UncertaintyHead::Cache cache;
  head.eval(in, cache);
  const std::vector<double> jac = head.input_jacobian(cache);
  const double h = 1e-6;
  for (int j = 0; j < 5; ++j) {
    std::vector<double> a = in, b = in;
    a[static_cast<std::size_t>(j)] += h;
    b[static_cast<std::size_t>(j)] -= h;
    const auto oa = head.eval(a), ob = head.eval(b);
    for (int k = 0; k < UncertaintyHead::kOutputs; ++k)
      EXPECT_NEAR(jac[static_cast<std::size_t>(k * 5 + j)], (oa[k] - ob[k]) / (2 * h), 1e-7);
  }
  const std::array<double, 3> dout{0.7, -0.2, 1.1};
  std::vector<double> grad(head.param_count(), 0.0);
  head.accumulate_param_grad(cache, dout, grad);
  for (std::size_t i = 0; i < head.param_count(); i += 5) {
    const double saved = head.params()[i];
    head.params()[i] = saved + h;
    const auto oa = head.eval(in);
    head.params()[i] = saved - h;
    const auto ob = head.eval(in);
    head.params()[i] = saved;
    double fd = 0.0;
    for (int k = 0; k < 3; ++k) fd += dout[static_cast<std::size_t>(k)] * (oa[k] - ob[k]) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-7);
  }
}

TEST(Contour, CircleWithinHalfCell) {
  const Box2 box{-1, -1, 1, 1};
  const int res = 101;
  const double cell = 2.0 / (res - 1);
  const auto f = [](const Point& p) { return std::hypot(p.x - 0.1, p.y) - 0.6; };
  const std::vector<Polyline> lines = extract_contour(f, box, res);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].front(), lines[0].back());
  for (const Point& p : lines[0]) EXPECT_LT(std::abs(f(p)), 0.5 * cell);
}

TEST(Contour, EmptyAndSignSymmetric) {
  const Box2 box{-1, -1, 1, 1};
  EXPECT_TRUE(extract_contour([](const Point&) { return 1.0; }, box, 21).empty());
  const auto f = [](const Point& p) { return p.x * p.x + 2 * p.y * p.y - 0.3 + 0.1 * p.x * p.y; };
  const auto g = [&](const Point& p) { return -f(p); };
  const auto a = extract_contour(f, box, 41);
  const auto b = extract_contour(g, box, 41);
  const auto pa = resample(a, 0.01), pb = resample(b, 0.01);
  const auto d = chamfer_distance(pa, pb);
  ASSERT_TRUE(d.has_value());
  EXPECT_LT(*d, 1e-12);
}

TEST(Contour, ChamferDistance) {
  const std::vector<Point> a{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Point> b{{0, 1, 0}, {1, 1, 0}};
  EXPECT_DOUBLE_EQ(*chamfer_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(*chamfer_distance(a, b), 1.0);
  EXPECT_FALSE(chamfer_distance(a, std::vector<Point>{}).has_value());
  const auto keep_none = [](const Point&) { return false; };
  EXPECT_FALSE(chamfer_distance(a, b, keep_none).has_value());
}

TEST(Contour, RocAucAndCurve) {
  const std::vector<double> scores{0.9, 0.8, 0.3, 0.1};
  const bool perfect[] = {true, true, false, false};
  const bool inverted[] = {false, false, true, true};
  const bool none[] = {false, false, false, false};
  EXPECT_DOUBLE_EQ(*roc_auc(scores, perfect), 1.0);
  EXPECT_DOUBLE_EQ(*roc_auc(scores, inverted), 0.0);
  EXPECT_FALSE(roc_auc(scores, none).has_value());
  const std::vector<double> tied{0.5, 0.5};
  const bool mixed[] = {true, false};
  EXPECT_DOUBLE_EQ(*roc_auc(tied, mixed), 0.5);
  const std::vector<RocPoint> curve = roc_curve(scores, perfect);
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve.front().fpr, 0.0);
  EXPECT_EQ(curve.front().tpr, 0.0);
  EXPECT_EQ(curve.back().fpr, 1.0);
  EXPECT_EQ(curve.back().tpr, 1.0);
  EXPECT_EQ(curve[2].tpr, 1.0);
  EXPECT_EQ(curve[2].fpr, 0.0);
  EXPECT_TRUE(roc_curve(scores, none).empty());
}

TEST(Flatland, AblationParse) {
  const Ablation all = Ablation::parse("");
  EXPECT_TRUE(all.filtering && all.ray_sampling && all.adaptive_smooth && all.bias_aware);
  const Ablation some = Ablation::parse("uf,bias");
  EXPECT_FALSE(some.filtering);
  EXPECT_TRUE(some.ray_sampling);
  EXPECT_TRUE(some.adaptive_smooth);
  EXPECT_FALSE(some.bias_aware);
  EXPECT_EQ(Ablation::parse(some.to_string()).to_string(), some.to_string());
  EXPECT_THROW(Ablation::parse("uf,xyz"), ValidationError);
}

TEST(Flatland, Schedules) {
  TrainConfig cfg;
  cfg.steps = 100;
  EXPECT_EQ(cfg.warmup_steps(), 20);
  EXPECT_EQ(cfg.p_prime(0), 0.0);
  EXPECT_EQ(cfg.p_prime(19), 0.0);
  EXPECT_EQ(cfg.p_prime(20), 0.0);
  EXPECT_DOUBLE_EQ(cfg.p_prime(40), 0.5);
  EXPECT_EQ(cfg.p_prime(60), 1.0);
  EXPECT_EQ(cfg.p_prime(99), 1.0);
  EXPECT_DOUBLE_EQ(cfg.beta_at(0), cfg.beta);
  EXPECT_NEAR(cfg.beta_at(99), cfg.beta_final, 1e-15);
}

TEST(Flatland, ConfigLoadAndValidation) {
  const ExperimentConfig clean = load_experiment_file(kConfigDir + "/clean.json");
  EXPECT_FALSE(clean.corruption.active());
  EXPECT_EQ(clean.scene.dimension(), 2);
  EXPECT_FALSE(clean.cameras.empty());
  const ExperimentConfig bad = load_experiment_file(kConfigDir + "/corrupted.json");
  EXPECT_TRUE(bad.corruption.active());
  EXPECT_DOUBLE_EQ(bad.corruption.depth_bias, 0.3);
  EXPECT_DOUBLE_EQ(bad.corruption.views_fraction, 0.3);
  EXPECT_THROW(load_experiment(R"({"scene": {"dimension": 2, "primitives": []}})"), std::exception);
  EXPECT_THROW(load_experiment("{"), ParseError);
  EXPECT_THROW(load_experiment_file(kConfigDir + "/does_not_exist.json"), std::exception);
}

TEST(Flatland, PriorsAreAffinePerViewAndCorruptionIsLocal) {
  const ExperimentConfig exp = load_experiment_file(kConfigDir + "/corrupted.json");
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  int corrupted_views = 0;
  for (bool c : priors.view_corrupted) corrupted_views += c ? 1 : 0;
  EXPECT_EQ(corrupted_views,
            static_cast<int>(std::llround(exp.corruption.views_fraction * static_cast<double>(exp.cameras.size()))));
  for (std::size_t v = 0; v < exp.cameras.size(); ++v) {
    std::vector<double> raw, gt;
    for (const PixelPrior& p : priors.pixels) {
      if (p.view != static_cast<int>(v) || !p.hit) continue;
      if (p.prior.corrupted) {
        EXPECT_TRUE(priors.view_corrupted[v]);
        EXPECT_TRUE(exp.corruption.region.contains(p.ray.at(p.gt_depth)));
        EXPECT_NEAR(priors.view_affine[v].apply(p.prior.depth), p.gt_depth + 0.3, 1e-12);
        continue;
      }
      raw.push_back(p.prior.depth);
      gt.push_back(p.gt_depth);
    }
    // Clean pixels: alignment against the true depth recovers the view's (w, q).
    const DepthAlignment a = align_depth(gt, raw);
    EXPECT_NEAR(a.w, priors.view_affine[v].w, 1e-9);
    EXPECT_NEAR(a.q, priors.view_affine[v].q, 1e-9);
  }
}

TEST(Train, ZeroStepsLeavesFieldsUnchanged) {
  ExperimentConfig exp = small_experiment("clean.json", 0);
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  const TrainResult r = train(exp, priors, Exec::serial);
  const TrainedModel init = initial_model(exp.train);
  EXPECT_EQ(r.model.grid.params(), init.grid.params());
  EXPECT_EQ(r.model.head.params(), init.head.params());
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, ParallelEqualsSerialBitwise) {
  for (const char* name : {"clean.json", "corrupted.json"}) {
    ExperimentConfig exp = small_experiment(name, 12);
    exp.train.warmup_frac = 0.25;
    exp.train.p_ramp_frac = 0.25;
    const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
    const TrainResult s = train(exp, priors, Exec::serial);
    const TrainResult p = train(exp, priors, Exec::parallel);
    EXPECT_EQ(s.model.grid.params(), p.model.grid.params()) << name;
    EXPECT_EQ(s.model.head.params(), p.model.head.params()) << name;
    EXPECT_EQ(log_csv(s.log), log_csv(p.log)) << name;
    const Evaluation es = evaluate(s.model, exp, priors, Exec::serial);
    const Evaluation ep = evaluate(s.model, exp, priors, Exec::parallel);
    EXPECT_EQ(metrics_json(es.metrics), metrics_json(ep.metrics)) << name;
    EXPECT_EQ(uncertainty_map_csv(es.pixels), uncertainty_map_csv(ep.pixels)) << name;
  }
}

TEST(Train, SameSeedSameResult) {
  ExperimentConfig exp = small_experiment("corrupted.json", 8);
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  const TrainResult a = train(exp, priors);
  const TrainResult b = train(exp, priors);
  ASSERT_FALSE(a.log.empty());
  EXPECT_EQ(a.log.back().total, b.log.back().total);
  exp.train.seed = 1;
  const TrainResult c = train(exp, priors);
  EXPECT_NE(a.log.back().total, c.log.back().total);
}

TEST(Train, LogColumns) {
  ExperimentConfig exp = small_experiment("clean.json", 3);
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  const std::string csv = log_csv(train(exp, priors).log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,L_rgb,L_eik,L_smooth,L_Mdepth,L_Mnormal,detach_fraction_depth,detach_fraction_normal");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Evaluate, GroundTruthFieldScoresNearPerfect) {
  const ExperimentConfig exp = load_experiment_file(kConfigDir + "/clean.json");
  const PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, 0);
  TrainedModel model = initial_model(exp.train);
  model.grid.fit_sdf(exp.scene);
  const Evaluation ev = evaluate(model, exp, priors);
  ASSERT_TRUE(ev.metrics.chamfer.has_value());
  EXPECT_LT(*ev.metrics.chamfer, 0.5 * exp.train.grid.spacing());
  EXPECT_LT(ev.metrics.all.depth_abs_rel, 0.05);
  EXPECT_GT(ev.metrics.all.normal_cos, 0.9);
  // No corruption: AUC undefined.
  EXPECT_FALSE(ev.metrics.auc.has_value());
  EXPECT_EQ(ev.metrics.masked.pixels + ev.metrics.unmasked.pixels, ev.metrics.all.pixels);
  EXPECT_NE(metrics_json(ev.metrics).find("\"auc\": null"), std::string::npos);
}
