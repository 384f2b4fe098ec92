#include "debsdf/flatland.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json_io.hpp"

namespace debsdf {

using namespace jsonio;

void FlatlandCamera::validate() const {
  if (!(fov > 0.0 && fov < M_PI)) throw ValidationError("camera fov must lie in (0, pi)");
  if (pixels < 8) throw ValidationError("camera needs at least 8 pixels");
}

Direction FlatlandCamera::pixel_direction(int pixel) const {
  const double u = (pixel + 0.5) / pixels - 0.5;
  return Direction::from_angle(orientation + fov * u);
}

Ablation Ablation::parse(const std::string& list) {
  Ablation a;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "uf")
      a.filtering = false;
    else if (item == "rs")
      a.ray_sampling = false;
    else if (item == "s")
      a.adaptive_smooth = false;
    else if (item == "bias")
      a.bias_aware = false;
    else
      throw ValidationError("unknown ablation '" + item + "' (expected uf, rs, s or bias)");
  }
  return a;
}

std::string Ablation::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(filtering, "uf");
  add(ray_sampling, "rs");
  add(adaptive_smooth, "s");
  add(bias_aware, "bias");
  return out;
}

void TrainConfig::validate() const {
  if (steps < 0) throw ValidationError("steps must be >= 0");
  if (rays_per_step < 1 || samples_per_ray < 2 || uniform_points < 0)
    throw ValidationError("rays_per_step, samples_per_ray must be positive");
  if (!(learning_rate > 0.0) || !(albedo_learning_rate > 0.0) || !(head_learning_rate > 0.0)) throw ValidationError("learning rates must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ValidationError("lr_decay must lie in (0, 1]");
  check_beta(beta);
  check_beta(beta_final);
  weights.validate();
  thresholds.validate();
  if (!(initial_uncertainty > kUncertaintyFloor)) throw ValidationError("initial_uncertainty must exceed the uncertainty floor");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0) || !(p_ramp_frac > 0.0))
    throw ValidationError("warmup_frac must lie in [0, 1] and p_ramp_frac must be > 0");
  if (!(smooth_jitter > 0.0) || !(near_surface_band > 0.0)) throw ValidationError("smoothness settings must be > 0");
  if (!(weight_cutoff >= 0.0)) throw ValidationError("weight_cutoff must be >= 0");
  if (!(prior_depth_weight >= 0.0) || !(prior_normal_weight >= 0.0))
    throw ValidationError("prior loss weights must be >= 0");
  if (!(init_radius > 0.0)) throw ValidationError("init_radius must be > 0");
  grid.validate();
}

std::int64_t TrainConfig::warmup_steps() const {
  return static_cast<std::int64_t>(std::llround(warmup_frac * steps));
}

double TrainConfig::p_prime(int step) const {
  const double gate = static_cast<double>(warmup_steps());
  if (step < gate) return 0.0;
  const double ramp = p_ramp_frac * steps;
  return std::min((step - gate) / std::max(ramp, 1.0), 1.0);
}

double TrainConfig::beta_at(int step) const {
  const double t = steps > 1 ? std::clamp(static_cast<double>(step) / (steps - 1), 0.0, 1.0) : 1.0;
  return beta * std::pow(beta_final / beta, t);
}

namespace {

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where, "expected an integer");
  return v.get<int>();
}

template <class Fn>
void each_field(const json& obj, const std::string& where, Fn&& fn) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!fn(it.key(), it.value(), where + "/" + it.key())) throw ParseError(where + "/" + it.key(), "unknown key");
  }
}

TrainConfig train_from_json(const json& obj, const std::string& where) {
  TrainConfig c;
  each_field(obj, where, [&](const std::string& key, const json& v, const std::string& at) {
    if (key == "steps") c.steps = integer(v, at);
    else if (key == "rays_per_step") c.rays_per_step = integer(v, at);
    else if (key == "samples_per_ray") c.samples_per_ray = integer(v, at);
    else if (key == "learning_rate") c.learning_rate = number(v, at);
    else if (key == "albedo_learning_rate") c.albedo_learning_rate = number(v, at);
    else if (key == "head_learning_rate") c.head_learning_rate = number(v, at);
    else if (key == "lr_decay") c.lr_decay = number(v, at);
    else if (key == "beta") c.beta = number(v, at);
    else if (key == "beta_final") c.beta_final = number(v, at);
    else if (key == "initial_uncertainty") c.initial_uncertainty = number(v, at);
    else if (key == "warmup_frac") c.warmup_frac = number(v, at);
    else if (key == "p_ramp_frac") c.p_ramp_frac = number(v, at);
    else if (key == "smooth_jitter") c.smooth_jitter = number(v, at);
    else if (key == "near_surface_band") c.near_surface_band = number(v, at);
    else if (key == "uniform_points") c.uniform_points = integer(v, at);
    else if (key == "weight_cutoff") c.weight_cutoff = number(v, at);
    else if (key == "init_radius") c.init_radius = number(v, at);
    else if (key == "init_inverted") {
      if (!v.is_boolean()) throw ParseError(at, "expected true or false");
      c.init_inverted = v.get<bool>();
    }    else if (key == "prior_depth_weight") c.prior_depth_weight = number(v, at);
    else if (key == "prior_normal_weight") c.prior_normal_weight = number(v, at);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ParseError(at, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "ablate") {
      if (!v.is_string()) throw ParseError(at, "expected a string such as \"uf,rs\"");
      c.ablation = Ablation::parse(v.get<std::string>());
    } else if (key == "grid") {
      each_field(v, at, [&](const std::string& k, const json& g, const std::string& a) {
        if (k == "lo") c.grid.lo = number(g, a);
        else if (k == "hi") c.grid.hi = number(g, a);
        else if (k == "nodes") c.grid.nodes = integer(g, a);
        else if (k == "features") c.grid.features = integer(g, a);
        else return false;
        return true;
      });
    } else if (key == "weights") {
      each_field(v, at, [&](const std::string& k, const json& g, const std::string& a) {
        if (k == "l1") c.weights.l1 = number(g, a);
        else if (k == "l2") c.weights.l2 = number(g, a);
        else if (k == "l3") c.weights.l3 = number(g, a);
        else if (k == "l4") c.weights.l4 = number(g, a);
        else return false;
        return true;
      });
    } else if (key == "thresholds") {
      each_field(v, at, [&](const std::string& k, const json& g, const std::string& a) {
        if (k == "tau_d") c.thresholds.tau_d = number(g, a);
        else if (k == "tau_n") c.thresholds.tau_n = number(g, a);
        else if (k == "tau_s") c.thresholds.tau_s = number(g, a);
        else if (k == "lambda") c.thresholds.lambda = number(g, a);
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  return c;
}

}  // namespace

ExperimentConfig load_experiment(const std::string& text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) throw ParseError("/", "experiment config must be a JSON object");
  reject_unknown(doc, {"scene", "cameras", "corruption", "train", "near", "eval_box"}, "");

  AnalyticScene scene = scene_from_json(require(doc, "scene", ""), "/scene");
  if (scene.dimension() != 2) throw ValidationError("/scene/dimension: flatland experiments need a 2D scene");
  ExperimentConfig cfg{std::move(scene), {}, {}, {}, 0.0};

  const json& cams = require(doc, "cameras", "");
  if (!cams.is_array() || cams.empty()) throw ParseError("/cameras", "expected a non-empty array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string at = "/cameras/" + std::to_string(i);
    const json& c = cams[i];
    if (!c.is_object()) throw ParseError(at, "expected an object");
    reject_unknown(c, {"center", "orientation", "fov", "pixels"}, at);
    FlatlandCamera cam;
    cam.center = vector_of(require(c, "center", at), 2, at + "/center");
    cam.orientation = number(require(c, "orientation", at), at + "/orientation");
    if (auto it = c.find("fov"); it != c.end()) cam.fov = number(*it, at + "/fov");
    if (auto it = c.find("pixels"); it != c.end()) cam.pixels = integer(*it, at + "/pixels");
    try {
      cam.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(at + ": " + e.what());
    }
    cfg.cameras.push_back(cam);
  }

  if (auto it = doc.find("corruption"); it != doc.end()) {
    const std::string at = "/corruption";
    const json& c = *it;
    if (!c.is_object()) throw ParseError(at, "expected an object");
    reject_unknown(c, {"region", "views_fraction", "depth_bias", "normal_rotation"}, at);
    const json& region = require(c, "region", at);
    if (!region.is_object()) throw ParseError(at + "/region", "expected an object");
    reject_unknown(region, {"min", "max"}, at + "/region");
    const Vec3 lo = vector_of(require(region, "min", at + "/region"), 2, at + "/region/min");
    const Vec3 hi = vector_of(require(region, "max", at + "/region"), 2, at + "/region/max");
    cfg.corruption.region = {lo.x, lo.y, hi.x, hi.y};
    if (auto f = c.find("views_fraction"); f != c.end()) cfg.corruption.views_fraction = number(*f, at + "/views_fraction");
    if (auto f = c.find("depth_bias"); f != c.end()) cfg.corruption.depth_bias = number(*f, at + "/depth_bias");
    if (auto f = c.find("normal_rotation"); f != c.end())
      cfg.corruption.normal_rotation = number(*f, at + "/normal_rotation");
    if (!(cfg.corruption.views_fraction >= 0.0 && cfg.corruption.views_fraction <= 1.0))
      throw ValidationError(at + "/views_fraction: must lie in [0, 1]");
  }
  if (auto it = doc.find("train"); it != doc.end()) cfg.train = train_from_json(*it, "/train");
  if (auto it = doc.find("near"); it != doc.end()) cfg.near = number(*it, "/near");
  if (auto it = doc.find("eval_box"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("/eval_box", "expected an object");
    reject_unknown(*it, {"min", "max"}, "/eval_box");
    const Vec3 lo = vector_of(require(*it, "min", "/eval_box"), 2, "/eval_box/min");
    const Vec3 hi = vector_of(require(*it, "max", "/eval_box"), 2, "/eval_box/max");
    if (!(hi.x > lo.x && hi.y > lo.y)) throw ValidationError("/eval_box: must be a non-empty box");
    cfg.eval_box = {lo.x, lo.y, hi.x, hi.y};
  }
  cfg.train.validate();

  const GridSpec& g = cfg.train.grid;
  const Box2& r = cfg.corruption.region;
  if (cfg.corruption.active() && (r.x0 >= r.x1 || r.y0 >= r.y1 || r.x0 < g.lo || r.x1 > g.hi || r.y0 < g.lo || r.y1 > g.hi))
    throw ValidationError("/corruption/region: must be a non-empty box inside the grid domain");
  for (std::size_t i = 0; i < cfg.cameras.size(); ++i) {
    const Point& c = cfg.cameras[i].center;
    if (!(c.x > g.lo && c.x < g.hi && c.y > g.lo && c.y < g.hi))
      throw ValidationError("/cameras/" + std::to_string(i) + "/center: must lie inside the grid domain");
  }
  return cfg;
}

ExperimentConfig load_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_experiment(ss.str());
}

Ray camera_ray(const FlatlandCamera& cam, int pixel, const GridSpec& grid, double near) {
  const Direction d = cam.pixel_direction(pixel);
  // Exit distance from the square domain (slab method, origin inside).
  double far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    const double dk = d[k];
    if (std::abs(dk) < 1e-15) continue;
    const double bound = dk > 0.0 ? grid.hi : grid.lo;
    far = std::min(far, (bound - cam.center[k]) / dk);
  }
  if (!(far > near)) throw ValidationError("camera ray leaves the grid domain before `near`");
  return Ray(cam.center, d, near, far);
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec3 rotate2(const Vec3& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y, 0.0};
}

}  // namespace

PriorSet synth_priors(const AnalyticScene& scene, const std::vector<FlatlandCamera>& cameras,
                      const CorruptionSpec& corruption, const GridSpec& grid, double near, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
  PriorSet set;
  const std::size_t views = cameras.size();
  std::vector<int> region_hits(views, 0);

  for (std::size_t v = 0; v < views; ++v) {
    const FlatlandCamera& cam = cameras[v];
    for (int px = 0; px < cam.pixels; ++px) {
      PixelPrior p;
      p.view = static_cast<int>(v);
      p.pixel = px;
      p.ray = camera_ray(cam, px, grid, near);
      if (auto hit = scene.intersect(p.ray)) {
        p.hit = true;
        p.gt_depth = hit->t;
        p.gt_normal = hit->normal.vec();
        p.gt_color = hit->albedo;
        if (corruption.region.contains(hit->point)) ++region_hits[v];
      }
      p.prior.depth = p.gt_depth;
      p.prior.normal = p.hit ? p.gt_normal : Vec3(1.0, 0.0, 0.0);
      set.pixels.push_back(p);
    }
  }

  // Affected views are drawn among the views that actually see the region.
  set.view_corrupted.assign(views, false);
  if (corruption.active()) {
    std::vector<std::size_t> eligible;
    for (std::size_t v = 0; v < views; ++v)
      if (region_hits[v] >= 3) eligible.push_back(v);
    for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[rng() % i]);
    const auto wanted = static_cast<std::size_t>(std::llround(corruption.views_fraction * static_cast<double>(views)));
    for (std::size_t i = 0; i < std::min(wanted, eligible.size()); ++i) set.view_corrupted[eligible[i]] = true;
  }

  set.view_affine.resize(views);
  for (std::size_t v = 0; v < views; ++v) {
    const double w = std::exp(std::log(0.5) + uniform01(rng) * std::log(4.0));
    const double q = uniform01(rng) - 0.5;
    set.view_affine[v] = {w, q};
  }

  for (PixelPrior& p : set.pixels) {
    const auto v = static_cast<std::size_t>(p.view);
    if (p.hit && set.view_corrupted[v] && corruption.region.contains(p.ray.at(p.gt_depth))) {
      p.prior.depth += corruption.depth_bias;
      p.prior.normal = rotate2(p.prior.normal, corruption.normal_rotation);
      p.prior.corrupted = true;
    }
    const DepthAlignment& a = set.view_affine[v];
    p.prior.depth = (p.prior.depth - a.q) / a.w;
  }
  return set;
}

}  // namespace debsdf
