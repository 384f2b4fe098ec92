// debsdf: experiments as subcommands. Artifacts go to --out (default ".").
//
// Exit codes: 0 success, 1 runtime failure or failed check, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "debsdf/experiments.hpp"
#include "debsdf/recon.hpp"
#include "debsdf/svg.hpp"

namespace fs = std::filesystem;
using namespace debsdf;

namespace {

// Malformed argument values that CLI11 cannot check on its own.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool literal_logistic = false;
  bool serial = false;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("--betas: not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--betas: empty list");
  return out;
}

int weight_profile_cmd(const Common& c, const std::string& toy_name, const std::string& kind_name, double beta) {
  const ToyCase toy = toy_case_from_string(toy_name);
  const DensityKind kind = density_kind_from_string(kind_name);
  const WeightProfile p = weight_profile(toy, kind, beta, c.literal_logistic);
  const fs::path dir = out_dir(c);
  write_file(dir / "weight_profile.csv", weight_profile_csv(std::span<const WeightProfile>(&p, 1)));

  svg::LineChart chart;
  chart.title = std::string("weight profile, case ") + to_string(toy) + ", " + to_string(kind) + ", beta " + fmt(beta);
  chart.x_label = "t";
  chart.y_label = "weight";
  svg::Series s{to_string(kind), {}, {}};
  for (const ProfileSample& q : p.samples) {
    s.x.push_back(q.t);
    s.y.push_back(q.weight);
  }
  chart.series.push_back(s);
  // Annotate every counted peak.
  const double floor = kPeakFloor * *std::max_element(s.y.begin(), s.y.end());
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    const bool left = i == 0 || s.y[i - 1] < s.y[i];
    std::size_t j = i;
    while (j + 1 < s.y.size() && s.y[j + 1] == s.y[i]) ++j;
    const bool right = j + 1 == s.y.size() || s.y[j + 1] < s.y[i];
    if (left && right && s.y[i] > floor && s.y[i] > 0.0) chart.markers.push_back({s.x[i], s.y[i], "peak"});
    i = j;
  }
  write_file(dir / "weight_profile.svg", svg::line_chart(chart));
  std::printf("case %s kind %s beta %g: peaks %d, depth %.6f (true %.6f)\n", to_string(toy), to_string(kind), beta,
              p.stats.peak_count, p.depth, p.true_depth);
  return 0;
}

int bias_sweep_cmd(const Common& c, const std::string& toy_name, const std::string& betas_text) {
  const ToyCase toy = toy_case_from_string(toy_name);
  const std::vector<double> betas = parse_list(betas_text);
  for (double b : betas)
    if (!(b > 0.0)) throw UsageError("--betas: every beta must be > 0");
  const std::vector<SweepRow> rows = bias_sweep(toy, betas, c.literal_logistic);
  const fs::path dir = out_dir(c);
  write_file(dir / "bias_sweep.csv", bias_sweep_csv(rows));

  svg::LineChart chart;
  chart.title = std::string("depth error vs beta, case ") + to_string(toy);
  chart.x_label = "beta";
  chart.y_label = "|D - d|";
  chart.log_x = true;
  chart.log_y = true;
  for (DensityKind kind : kSweepKinds) {
    svg::Series s{to_string(kind), {}, {}};
    for (const SweepRow& r : rows)
      if (r.kind == kind) {
        s.x.push_back(r.beta);
        s.y.push_back(std::max(r.depth_error, 1e-12));
      }
    chart.series.push_back(s);
  }
  write_file(dir / "bias_sweep.svg", svg::line_chart(chart));
  for (DensityKind kind : kSweepKinds)
    std::printf("%-8s median |D - d| = %.6g\n", to_string(kind), median_depth_error(rows, kind));
  return 0;
}

int curvature_cmd(const Common& c, int rays) {
  const std::vector<CurvatureRow> rows = curvature_check(c.seed, rays);
  write_file(out_dir(c) / "curvature_check.csv", curvature_csv(rows));
  std::printf("%-7s %8s %6s %14s %14s\n", "shape", "radius", "rays", "mean_rel_err", "max_rel_err");
  bool ok = true;
  for (const CurvatureRow& r : rows) {
    std::printf("%-7s %8g %6d %14.3e %14.3e\n", r.dimension == 2 ? "circle" : "sphere", r.radius, r.rays,
                r.mean_rel_error, r.max_rel_error);
    ok = ok && r.max_rel_error < 0.02;
  }
  return ok ? 0 : 1;
}

int grad_check_cmd(const Common& c, int fixtures) {
  const std::vector<GradCheckRow> rows = grad_check_suite(c.seed, fixtures);
  write_file(out_dir(c) / "grad_check.csv", grad_check_csv(rows));
  bool ok = true;
  std::printf("%-24s %8s %9s %12s %5s\n", "term", "checked", "detached", "max_rel_err", "pass");
  for (const GradCheckRow& r : rows) {
    std::printf("%-24s %8d %9d %12.3e %5s\n", r.term.c_str(), r.checked, r.detached, r.max_rel_error,
                r.passed ? "yes" : "NO");
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

struct ReconRun {
  ExperimentConfig exp;
  PriorSet priors;
  TrainResult trained;
  Evaluation eval;
  double seconds = 0.0;
};

ExperimentConfig load_run_config(const Common& c, const std::string& config, const std::string& ablate, int steps) {
  ExperimentConfig exp = load_experiment_file(config);
  if (c.seed_given) exp.train.seed = c.seed;
  if (!ablate.empty()) {
    try {
      exp.train.ablation = Ablation::parse(ablate);
    } catch (const ValidationError& e) {
      throw UsageError(std::string("--ablate: ") + e.what());
    }
  }
  if (steps > 0) exp.train.steps = steps;
  exp.train.validate();
  return exp;
}

ReconRun run_recon(const Common& c, const std::string& config, const std::string& ablate, int steps) {
  ExperimentConfig exp = load_run_config(c, config, ablate, steps);
  const Exec exec = c.serial ? Exec::serial : Exec::parallel;
  PriorSet priors = synth_priors(exp.scene, exp.cameras, exp.corruption, exp.train.grid, exp.near, exp.train.seed);
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult trained = train(exp, priors, exec);
  Evaluation eval = evaluate(trained.model, exp, priors, exec);
  if (!trained.log.empty()) {
    eval.metrics.detach_fraction_depth = trained.log.back().detach_fraction_depth;
    eval.metrics.detach_fraction_normal = trained.log.back().detach_fraction_normal;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ReconRun{std::move(exp), std::move(priors), std::move(trained), std::move(eval), seconds};
}

void print_metrics(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); };
  std::printf("chamfer %s  region chamfer %s  AUC %s\n", opt(m.chamfer).c_str(), opt(m.chamfer_region).c_str(),
              opt(m.auc).c_str());
  std::printf("depth abs_rel %s (masked %s, unmasked %s)  normal cos %s\n", fmt(m.all.depth_abs_rel).c_str(),
              fmt(m.masked.depth_abs_rel).c_str(), fmt(m.unmasked.depth_abs_rel).c_str(),
              fmt(m.all.normal_cos).c_str());
}

int recon_cmd(const Common& c, const std::string& config, const std::string& ablate, int steps) {
  const ReconRun run = run_recon(c, config, ablate, steps);
  const fs::path dir = out_dir(c);
  write_file(dir / "log.csv", log_csv(run.trained.log));
  write_file(dir / "metrics.json", metrics_json(run.eval.metrics));
  write_file(dir / "uncertainty_map.csv", uncertainty_map_csv(run.eval.pixels));
  const std::string ab = run.exp.train.ablation.to_string();
  write_file(dir / "contour.svg", svg::contour_plot(run.eval.contour, run.eval.gt_contour, run.exp.eval_box,
                                                    run.exp.cameras,
                                                    "zero contour" + (ab.empty() ? std::string() : " (ablate " + ab + ")")));
  std::printf("trained %d steps in %.1f s\n", run.exp.train.steps, run.seconds);
  print_metrics(run.eval.metrics);
  return 0;
}

int roc_cmd(const Common& c, const std::string& config, int steps) {
  const ReconRun run = run_recon(c, config, "", steps);
  std::vector<double> scores;
  auto flags = std::make_unique<bool[]>(run.eval.pixels.size());
  for (std::size_t i = 0; i < run.eval.pixels.size(); ++i) {
    scores.push_back(run.eval.pixels[i].a);
    flags[i] = run.eval.pixels[i].corrupted;
  }
  const std::span<const bool> labels(flags.get(), run.eval.pixels.size());
  const std::vector<RocPoint> curve = roc_curve(scores, labels);
  const fs::path dir = out_dir(c);
  std::string csv = "threshold,fpr,tpr\n";
  svg::Series s{"blend uncertainty", {}, {}};
  for (const RocPoint& p : curve) {
    csv += fmt(p.threshold) + "," + fmt(p.fpr) + "," + fmt(p.tpr) + "\n";
    s.x.push_back(p.fpr);
    s.y.push_back(p.tpr);
  }
  write_file(dir / "roc.csv", csv);
  write_file(dir / "uncertainty_map.csv", uncertainty_map_csv(run.eval.pixels));
  svg::LineChart chart;
  chart.title = "corruption ROC";
  chart.x_label = "false positive rate";
  chart.y_label = "true positive rate";
  chart.series = {s, svg::Series{"chance", {0.0, 1.0}, {0.0, 1.0}}};
  write_file(dir / "roc.svg", svg::line_chart(chart));
  if (!run.eval.metrics.auc) {
    std::fprintf(stderr, "no corrupted pixels (or no clean ones): AUC undefined\n");
    return 1;
  }
  std::printf("AUC %.4f over %zu pixels (%zu corrupted)\n", *run.eval.metrics.auc, run.eval.pixels.size(),
              run.eval.metrics.corrupted_pixels);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"debsdf: bias-aware SDF rendering and uncertainty-guided priors"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Common c;
  app.add_option("--out", c.out, "Artifact directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", c.seed, "Random seed (overrides the config's)");
  app.add_flag("--eq2-as-printed", c.literal_logistic, "Use the increasing logistic form 1/(beta(1+exp(-s/beta)))");
  app.add_flag("--serial", c.serial, "Run the serial reference path instead of the OpenMP one");

  std::string toy = "a", kind = "debsdf", betas = "0.1,0.05,0.02,0.01", config, ablate;
  double beta = 0.02;
  int rays = 100, fixtures = 50, steps = 0;

  auto* wp = app.add_subcommand("weight-profile", "Weight profile w(t) along a toy ray (CSV + SVG)");
  wp->add_option("--case", toy, "Toy case: a (brush-past) or b (sphere hit)")->check(CLI::IsMember({"a", "b"}));
  wp->add_option("--kind", kind, "laplace | logistic | tuvr | debsdf")
      ->check(CLI::IsMember({"laplace", "logistic", "tuvr", "debsdf"}));
  wp->add_option("--beta", beta, "Density width")->check(CLI::PositiveNumber);

  auto* bs = app.add_subcommand("bias-sweep", "Depth error per density kind over a list of betas (CSV + SVG)");
  bs->add_option("--case", toy, "Toy case: a or b")->check(CLI::IsMember({"a", "b"}));
  bs->add_option("--betas", betas, "Comma-separated betas");

  auto* cc = app.add_subcommand("curvature-check", "Curvature-radius estimator vs. analytic oracle");
  cc->add_option("--rays", rays, "Random rays per radius")->check(CLI::PositiveNumber);

  auto* gc = app.add_subcommand("grad-check", "Finite-difference checks of every loss term");
  gc->add_option("--fixtures", fixtures, "Random fixtures per term")->check(CLI::PositiveNumber);

  auto* rt = app.add_subcommand("recon-toy", "Flatland reconstruction: train, evaluate, write artifacts");
  rt->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  rt->add_option("--ablate", ablate, "Comma-separated modules to disable: uf, rs, s, bias");
  rt->add_option("--steps", steps, "Override the configured step count")->check(CLI::PositiveNumber);

  auto* ur = app.add_subcommand("uncertainty-roc", "ROC of blend uncertainty against corruption flags");
  ur->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  ur->add_option("--steps", steps, "Override the configured step count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  c.seed_given = seed_opt->count() > 0;

  try {
    if (wp->parsed()) return weight_profile_cmd(c, toy, kind, beta);
    if (bs->parsed()) return bias_sweep_cmd(c, toy, betas);
    if (cc->parsed()) return curvature_cmd(c, rays);
    if (gc->parsed()) return grad_check_cmd(c, fixtures);
    if (rt->parsed()) return recon_cmd(c, config, ablate, steps);
    if (ur->parsed()) return roc_cmd(c, config, steps);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "%s\n%s", e.what(), app.help().c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
