#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "debsdf/recon.hpp"
#include "debsdf/renderer.hpp"
#include "debsdf/sampler.hpp"
#include "flatland_render.hpp"

namespace debsdf {

using grad::Var;

TrainedModel initial_model(const TrainConfig& cfg) {
  TrainedModel m{GridField2D(cfg.grid), UncertaintyHead(8, 32)};
  m.grid.init_circle({0.0, 0.0, 0.0}, cfg.init_radius, cfg.init_inverted);
  m.grid.init_albedo(0.5);
  m.grid.init_features(cfg.seed * 2 + 1, 0.5);
  m.head.init(cfg.seed * 2 + 2, cfg.initial_uncertainty);
  return m;
}

namespace {

struct RayJob {
  grad::Tape tape;
  std::size_t pixel = 0;  // index into PriorSet::pixels
  flatland::RayRender<Var> render;
  std::unordered_map<std::size_t, Var> leaves;
  std::vector<flatland::GradientPair<Var>> uniform_pairs;  // uniform batch job only

  // Filled by the loss phase.
  double rgb = 0.0, eik = 0.0, smooth = 0.0, mdepth = 0.0, mnormal = 0.0, loss = 0.0;
  bool has_prior = false, has_depth = false, detached_depth = false, detached_normal = false;
  double blend = 0.0;
  std::vector<std::pair<std::size_t, double>> grad;
  std::vector<double> head_grad;
};

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  // Updates params[k] from g[k]; moment state lives at state_offset + k.
  void step(std::span<double> params, std::span<const double> g, std::size_t state_offset, double lr) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const std::size_t i = state_offset + k;
      m_[i] = kB1 * m_[i] + (1.0 - kB1) * g[k];
      v_[i] = kB2 * v_[i] + (1.0 - kB2) * g[k] * g[k];
      const double mh = m_[i] / (1.0 - b1t_);
      const double vh = v_[i] / (1.0 - b2t_);
      params[k] -= lr * mh / (std::sqrt(vh) + kEps);
    }
  }
  // Call once per step before step().
  void begin() {
    b1t_ *= kB1;
    b2t_ *= kB2;
  }

 private:
  static constexpr double kB1 = 0.9;
  static constexpr double kB2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m_, v_;
  double b1t_ = 1.0, b2t_ = 1.0;
};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::array<Var, 2> grad_at(flatland::ParamSource<Var>& src, const GridField2D& grid, const Point& x) {
  const Stencil st = grid.stencil(x);
  return {src.combine(grid.sdf_offset(), st.node, st.dwx), src.combine(grid.sdf_offset(), st.node, st.dwy)};
}

}  // namespace

TrainResult train(const ExperimentConfig& exp, const PriorSet& priors, Exec exec,
                  const std::function<void(const StepLog&)>& on_step) {
  const TrainConfig& cfg = exp.train;
  cfg.validate();
  TrainResult result{initial_model(cfg), {}};
  GridField2D& grid = result.model.grid;
  UncertaintyHead& head = result.model.head;

  RayPool pool;
  std::vector<std::size_t> pool_pixel;
  // Rays that miss the scene stay in the pool: their target is the black
  // background and they carry no prior terms.
  for (std::size_t i = 0; i < priors.pixels.size(); ++i) {
    pool.entries.push_back({priors.pixels[i].view, priors.pixels[i].pixel, 1.0});
    pool_pixel.push_back(i);
  }
  if (pool.entries.empty()) throw ValidationError("experiment has no camera pixels");
  pool.warmup_steps = cfg.warmup_steps();

  const std::size_t n_grid = grid.params().size();
  const std::size_t n_head = head.param_count();
  Adam adam(n_grid + n_head);
  std::vector<double> g(n_grid + n_head, 0.0);

  const auto batch = static_cast<std::size_t>(cfg.rays_per_step);
  std::vector<RayJob> jobs(batch + 1);  // last job holds the uniform-space batch
  const std::size_t views = exp.cameras.size();
  std::vector<std::optional<DepthAlignment>> align_cache(views);
  std::mt19937_64 draw_rng(cfg.seed * 0x9E3779B97F4A7C15ull + 17);
  const Ablation& ab = cfg.ablation;
  const UncertaintyThresholds& th = cfg.thresholds;
  const LossWeights& lw = cfg.weights;

  for (int step = 0; step < cfg.steps; ++step) {
    pool.iteration = step;
    std::vector<double> probs;
    if (ab.ray_sampling) {
      probs = build_ray_distribution(pool);
    } else {
      probs.assign(pool.entries.size(), 1.0 / static_cast<double>(pool.entries.size()));
    }
    const std::vector<std::size_t> drawn = draw_rays(probs, batch, draw_rng);

    flatland::RaySettings rs;
    rs.beta = cfg.beta_at(step);
    rs.bias_aware = ab.bias_aware;
    rs.p_prime = ab.bias_aware ? cfg.p_prime(step) : 0.0;
    rs.lambda = th.lambda;
    rs.weight_cutoff = cfg.weight_cutoff;
    rs.near_surface_band = cfg.near_surface_band;
    rs.smooth_jitter = cfg.smooth_jitter;
    rs.detach_uncertainty_weights = !ab.filtering;
    const std::uint64_t step_seed = ray_stream_seed(cfg.seed, static_cast<std::uint64_t>(step));
    // Uncertainty guides neither ray sampling nor smoothing during warm-up.
    const bool warming_up = step < pool.warmup_steps;

    // Forward: one tape per ray.
    for_each_index(batch + 1, exec, [&](std::size_t b) {
      RayJob& job = jobs[b];
      job.tape.clear();
      job.grad.clear();
      std::mt19937_64 rng(ray_stream_seed(step_seed, b));
      flatland::ParamSource<Var> src{job.tape, grid.params()};
      if (b < batch) {
        job.pixel = pool_pixel[drawn[b]];
        job.render = flatland::render_flatland_ray<Var>(grid, head, src, priors.pixels[job.pixel].ray,
                                                         cfg.samples_per_ray, rs, &rng);
      } else {
        job.uniform_pairs.clear();
        std::normal_distribution<double> jitter(0.0, cfg.smooth_jitter);
        const GridSpec& gs = grid.spec();
        for (int k = 0; k < cfg.uniform_points; ++k) {
          const Point x(gs.lo + (gs.hi - gs.lo) * uniform01(rng), gs.lo + (gs.hi - gs.lo) * uniform01(rng));
          Point xe = x;
          xe.x += jitter(rng);
          xe.y += jitter(rng);
          job.uniform_pairs.push_back({grad_at(src, grid, x), grad_at(src, grid, xe)});
        }
      }
      job.leaves = std::move(src.leaves);
    });

    // Per-view alignment of the raw depth prior to the rendered depth over
    // this step's rays of that view.
    std::size_t n_points = jobs[batch].uniform_pairs.size();
    std::vector<std::vector<double>> view_rendered(views), view_prior(views);
    for (std::size_t b = 0; b < batch; ++b) {
      const PixelPrior& px = priors.pixels[jobs[b].pixel];
      n_points += jobs[b].render.near_surface.size();
      if (!px.hit) continue;
      view_rendered[static_cast<std::size_t>(px.view)].push_back(jobs[b].render.depth.value());
      view_prior[static_cast<std::size_t>(px.view)].push_back(px.prior.depth);
    }
    for (std::size_t v = 0; v < views; ++v) {
      if (view_rendered[v].size() < 2) continue;
      try {
        align_cache[v] = align_depth(view_rendered[v], view_prior[v]);
      } catch (const DegenerateError&) {
        // keep the previous alignment
      }
    }

    const double inv_b = 1.0 / static_cast<double>(batch);
    const double inv_p = n_points ? 1.0 / static_cast<double>(n_points) : 0.0;

    // Losses and backward, still one tape per ray.
    for_each_index(batch + 1, exec, [&](std::size_t b) {
      RayJob& job = jobs[b];
      Var eik_sum = 0.0;
      Var smooth_sum = 0.0;
      const auto& pairs = b < batch ? job.render.near_surface : job.uniform_pairs;
      for (const auto& pr : pairs) {
        eik_sum += eikonal_term<Var>(std::span<const Var>(pr.g));
        smooth_sum += smooth_term<Var>(std::span<const Var>(pr.g), std::span<const Var>(pr.g_jitter));
      }
      job.eik = eik_sum.value();
      Var loss;
      if (b < batch) {
        const PixelPrior& px = priors.pixels[job.pixel];
        const auto& r = job.render;
        const Var u_d = grad::max(r.u_d, Var(kUncertaintyFloor));
        const Var u_n = grad::max(0.5 * (r.v_n[0] + r.v_n[1]), Var(kUncertaintyFloor));
        const double gt_color[3] = {px.gt_color.x, px.gt_color.y, px.gt_color.z};
        const Var rgb = rgb_loss<Var>(std::span<const Var>(r.color), gt_color);
        const double prior_n[2] = {px.prior.normal.x, px.prior.normal.y};

        Var geo = 0.0;
        const auto& align = align_cache[static_cast<std::size_t>(px.view)];
        job.has_prior = px.hit;
        job.has_depth = px.hit && align.has_value();
        if (!px.hit) {
          job.mdepth = job.mnormal = 0.0;
          job.detached_depth = job.detached_normal = false;
        } else if (ab.filtering) {
          if (job.has_depth) {
            const auto md = masked_depth_loss<Var>(u_d, r.depth, Var(align->apply(px.prior.depth)), th.tau_d);
            geo += lw.l3 * md.value;
            job.mdepth = md.value.value();
            job.detached_depth = md.detached;
          }
          const auto mn = masked_normal_loss<Var>(u_n, std::span<const Var>(r.normal), prior_n, th.tau_n);
          geo += lw.l4 * mn.value;
          job.mnormal = mn.value.value();
          job.detached_normal = mn.detached;
        } else {
          // Unmasked prior losses drive geometry; the uncertainty head still
          // fits the residuals, which are detached in full.
          const std::array<Var, 2> n_sg{grad::stop_gradient(r.normal[0]), grad::stop_gradient(r.normal[1])};
          if (job.has_depth) {
            const double d = align->apply(px.prior.depth);
            const Var dl = depth_prior_loss<Var>(r.depth, Var(d));
            geo += cfg.prior_depth_weight * dl;
            job.mdepth = dl.value();
            const auto md = masked_depth_loss<Var>(u_d, grad::stop_gradient(r.depth), Var(d), th.tau_d);
            geo += lw.l3 * md.value;
            job.detached_depth = md.detached;
          }
          const Var nl = normal_prior_loss<Var>(std::span<const Var>(r.normal), prior_n);
          geo += cfg.prior_normal_weight * nl;
          job.mnormal = nl.value();
          const auto mn = masked_normal_loss<Var>(u_n, std::span<const Var>(n_sg), prior_n, th.tau_n);
          geo += lw.l4 * mn.value;
          job.detached_normal = mn.detached;
        }
        job.blend = blend_uncertainty(u_d.value(), u_n.value(), th.lambda);
        const double mask = ab.adaptive_smooth && !warming_up ? smooth_mask(job.blend, th.tau_s) : 1.0;
        job.rgb = rgb.value();
        job.smooth = mask * smooth_sum.value();
        loss = inv_b * (rgb + geo) + (lw.l1 * inv_p) * eik_sum + (lw.l2 * inv_p * mask) * smooth_sum;
      } else {
        job.smooth = smooth_sum.value();
        loss = (lw.l1 * inv_p) * eik_sum + (lw.l2 * inv_p) * smooth_sum;
      }
      job.loss = loss.value();
      if (loss.is_constant()) return;
      job.tape.backward(loss);
      job.grad.reserve(job.leaves.size());
      for (const auto& [index, var] : job.leaves) job.grad.emplace_back(index, job.tape.adjoint(var));
      std::sort(job.grad.begin(), job.grad.end());
      job.head_grad.assign(n_head, 0.0);
      for (const auto& use : job.render.head_uses) {
        std::array<double, UncertaintyHead::kOutputs> dout{};
        for (int k = 0; k < UncertaintyHead::kOutputs; ++k) dout[k] = job.tape.adjoint(use.outputs[k]);
        head.accumulate_param_grad(use.cache, dout, job.head_grad);
      }
    });

    // Ordered reduction keeps the update independent of the execution policy.
    std::fill(g.begin(), g.end(), 0.0);
    StepLog log;
    log.step = step;
    std::size_t with_prior = 0;
    std::size_t with_depth = 0;
    std::size_t detached_d = 0;
    std::size_t detached_n = 0;
    for (std::size_t b = 0; b <= batch; ++b) {
      const RayJob& job = jobs[b];
      for (const auto& [index, value] : job.grad) g[index] += value;
      if (!job.head_grad.empty() && b < batch)
        for (std::size_t k = 0; k < n_head; ++k) g[n_grid + k] += job.head_grad[k];
      log.total += job.loss;
      log.eik += job.eik;
      log.smooth += job.smooth;
      if (b == batch) continue;
      log.rgb += job.rgb;
      if (job.has_prior) {
        ++with_prior;
        log.mnormal += job.mnormal;
        detached_n += job.detached_normal ? 1 : 0;
      }
      if (job.has_depth) {
        ++with_depth;
        log.mdepth += job.mdepth;
        detached_d += job.detached_depth ? 1 : 0;
      }
    }
    log.rgb *= inv_b;
    log.mnormal = with_prior ? log.mnormal / static_cast<double>(with_prior) : 0.0;
    log.eik *= inv_p;
    log.smooth *= inv_p;
    log.mdepth = with_depth ? log.mdepth / static_cast<double>(with_depth) : 0.0;
    log.detach_fraction_depth = with_depth ? static_cast<double>(detached_d) / static_cast<double>(with_depth) : 0.0;
    log.detach_fraction_normal = with_prior ? static_cast<double>(detached_n) / static_cast<double>(with_prior) : 0.0;
    if (!std::isfinite(log.total)) {
      std::ostringstream msg;
      msg << "training diverged at step " << step << ": rgb=" << log.rgb << " eik=" << log.eik
          << " smooth=" << log.smooth << " depth=" << log.mdepth << " normal=" << log.mnormal;
      throw NonFiniteError(msg.str());
    }
    for (double v : g)
      if (!std::isfinite(v)) throw NonFiniteError("non-finite gradient at step " + std::to_string(step));

    const double decay = std::pow(cfg.lr_decay, static_cast<double>(step) / std::max(cfg.steps, 1));
    adam.begin();
    const std::size_t a0 = grid.albedo_offset(0);
    const std::size_t a1 = grid.feature_offset(0);
    auto update = [&](std::span<double> p, std::size_t at, double lr) {
      adam.step(p, std::span<const double>(g).subspan(at, p.size()), at, lr * decay);
    };
    std::span<double> gp(grid.params());
    update(gp.subspan(0, a0), 0, cfg.learning_rate);
    update(gp.subspan(a0, a1 - a0), a0, cfg.albedo_learning_rate);
    update(gp.subspan(a1), a1, cfg.learning_rate);
    update(std::span<double>(head.params()), n_grid, cfg.head_learning_rate);

    for (std::size_t b = 0; b < batch; ++b) pool.entries[drawn[b]].a = jobs[b].blend;
    result.log.push_back(log);
    if (on_step) on_step(log);
  }
  return result;
}

std::string log_csv(const std::vector<StepLog>& log) {
  std::string out = "step,L_rgb,L_eik,L_smooth,L_Mdepth,L_Mnormal,detach_fraction_depth,detach_fraction_normal\n";
  char buf[512];
  for (const StepLog& s : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.6g,%.6g\n", s.step, s.rgb, s.eik, s.smooth, s.mdepth,
                  s.mnormal, s.detach_fraction_depth, s.detach_fraction_normal);
    out += buf;
  }
  return out;
}

}  // namespace debsdf
