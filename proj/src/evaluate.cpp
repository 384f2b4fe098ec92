#include <cmath>
#include <cstdio>
#include <memory>

#include <nlohmann/json.hpp>

#include "debsdf/recon.hpp"
#include "flatland_render.hpp"

namespace debsdf {

namespace {

struct SplitAccumulator {
  std::size_t n = 0;
  double depth = 0.0, cos = 0.0, l1 = 0.0;

  void add(double d_rel, double c, double l) {
    ++n;
    depth += d_rel;
    cos += c;
    l1 += l;
  }
  SplitMetrics finish() const {
    SplitMetrics m;
    m.pixels = n;
    if (n == 0) return m;
    const double k = 1.0 / static_cast<double>(n);
    m.depth_abs_rel = depth * k;
    m.normal_cos = cos * k;
    m.normal_l1 = l1 * k;
    return m;
  }
};

// Contour points closer than this are merged by resampling; half a lattice cell.
double contour_spacing(const GridSpec& g) { return 0.5 * (g.hi - g.lo) / (kContourResolution - 1); }

}  // namespace

Evaluation evaluate(const TrainedModel& model, const ExperimentConfig& exp, const PriorSet& priors, Exec exec) {
  const TrainConfig& cfg = exp.train;
  const GridField2D& grid = model.grid;
  const UncertaintyHead& head = model.head;
  const UncertaintyThresholds& th = cfg.thresholds;

  flatland::RaySettings rs;
  rs.beta = cfg.beta_at(std::max(cfg.steps - 1, 0));
  rs.bias_aware = cfg.ablation.bias_aware;
  rs.p_prime = cfg.ablation.bias_aware ? cfg.p_prime(std::max(cfg.steps - 1, 0)) : 0.0;
  rs.lambda = th.lambda;
  rs.weight_cutoff = cfg.weight_cutoff;

  struct Rendered {
    double depth = 0.0, nx = 0.0, ny = 0.0, u_d = 0.0, u_n = 0.0;
  };
  std::vector<Rendered> out(priors.pixels.size());
  for_each_index(priors.pixels.size(), exec, [&](std::size_t i) {
    const PixelPrior& px = priors.pixels[i];
    if (!px.hit) return;
    flatland::ParamSource<double> src{grid.params()};
    // Midpoint samples: evaluation is deterministic without an rng.
    const auto r = flatland::render_flatland_ray<double>(grid, head, src, px.ray, cfg.samples_per_ray, rs, nullptr);
    Rendered& o = out[i];
    o.depth = r.depth;
    o.nx = r.normal[0];
    o.ny = r.normal[1];
    o.u_d = std::max(r.u_d, kUncertaintyFloor);
    o.u_n = std::max(0.5 * (r.v_n[0] + r.v_n[1]), kUncertaintyFloor);
  });

  Evaluation ev;
  SplitAccumulator all, masked, unmasked;
  std::vector<double> scores;
  for (std::size_t i = 0; i < priors.pixels.size(); ++i) {
    const PixelPrior& px = priors.pixels[i];
    if (!px.hit) continue;
    const Rendered& o = out[i];
    PixelEval pe;
    pe.view = px.view;
    pe.pixel = px.pixel;
    pe.depth = o.depth;
    pe.gt_depth = px.gt_depth;
    pe.u_d = o.u_d;
    pe.u_n = o.u_n;
    pe.a = blend_uncertainty(o.u_d, o.u_n, th.lambda);
    pe.corrupted = px.prior.corrupted;
    ev.pixels.push_back(pe);

    const double d_rel = std::abs(o.depth - px.gt_depth) / px.gt_depth;
    const double len = std::hypot(o.nx, o.ny);
    const double ux = len > 1e-12 ? o.nx / len : 1.0;
    const double uy = len > 1e-12 ? o.ny / len : 0.0;
    const double c = ux * px.gt_normal.x + uy * px.gt_normal.y;
    const double l1 = std::abs(ux - px.gt_normal.x) + std::abs(uy - px.gt_normal.y);
    all.add(d_rel, c, l1);
    (pe.a > th.tau_s ? masked : unmasked).add(d_rel, c, l1);
    scores.push_back(pe.a);
    if (pe.corrupted) ++ev.metrics.corrupted_pixels;
  }
  ev.metrics.all = all.finish();
  ev.metrics.masked = masked.finish();
  ev.metrics.unmasked = unmasked.finish();
  {
    // std::vector<bool> has no contiguous storage to span over.
    auto flags = std::make_unique<bool[]>(ev.pixels.size());
    for (std::size_t k = 0; k < ev.pixels.size(); ++k) flags[k] = ev.pixels[k].corrupted;
    ev.metrics.auc = roc_auc(scores, std::span<const bool>(flags.get(), ev.pixels.size()));
  }

  const GridSpec& gs = grid.spec();
  const Box2 domain{gs.lo, gs.lo, gs.hi, gs.hi};
  ev.contour = extract_contour([&](const Point& p) { return grid.sdf(p); }, domain, kContourResolution);
  ev.gt_contour = extract_contour([&](const Point& p) { return exp.scene.sdf(p); }, domain, kContourResolution);
  const double spacing = contour_spacing(gs);
  const std::vector<Point> learned = resample(ev.contour, spacing);
  const std::vector<Point> truth = resample(ev.gt_contour, spacing);
  ev.metrics.chamfer = chamfer_distance(learned, truth, [&](const Point& p) { return exp.eval_box.contains(p); });
  if (exp.corruption.active())
    ev.metrics.chamfer_region =
        chamfer_distance(learned, truth, [&](const Point& p) { return exp.corruption.region.contains(p); });
  return ev;
}

std::string metrics_json(const Metrics& m) {
  using nlohmann::ordered_json;
  auto split = [](const SplitMetrics& s) {
    ordered_json j;
    j["pixels"] = s.pixels;
    j["depth_abs_rel"] = s.depth_abs_rel;
    j["normal_cos"] = s.normal_cos;
    j["normal_l1"] = s.normal_l1;
    return j;
  };
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["chamfer"] = opt(m.chamfer);
  j["chamfer_region"] = opt(m.chamfer_region);
  j["auc"] = opt(m.auc);
  j["all"] = split(m.all);
  j["masked"] = split(m.masked);
  j["unmasked"] = split(m.unmasked);
  j["detach_fraction_depth"] = m.detach_fraction_depth;
  j["detach_fraction_normal"] = m.detach_fraction_normal;
  j["corrupted_pixels"] = m.corrupted_pixels;
  return j.dump(2) + "\n";
}

std::string uncertainty_map_csv(const std::vector<PixelEval>& pixels) {
  std::string out = "view,pixel,depth,gt_depth,U_d,U_n,A,corrupted\n";
  char buf[256];
  for (const PixelEval& p : pixels) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", p.view, p.pixel, p.depth, p.gt_depth, p.u_d,
                  p.u_n, p.a, p.corrupted ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace debsdf
