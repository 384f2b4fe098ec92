#include "debsdf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "debsdf/losses.hpp"
#include "debsdf/sdf_scene.hpp"
#include "debsdf/uncertainty_head.hpp"

namespace debsdf {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

WeightProfile weight_profile(ToyCase toy, DensityKind kind, double beta, bool literal_logistic) {
  const ToyFixture fx = toy_fixture(toy);
  DensityConfig cfg;
  cfg.kind = kind;
  cfg.beta = beta;
  cfg.literal_logistic = literal_logistic;
  const RenderOutput r = render_ray(fx.scene, fx.ray, cfg, kToySamples, nullptr);

  WeightProfile p;
  p.toy = toy;
  p.kind = kind;
  p.beta = beta;
  p.true_depth = fx.true_depth;
  p.depth = r.depth;
  p.samples.resize(r.t.size());
  for (std::size_t i = 0; i < r.t.size(); ++i) p.samples[i] = {r.t[i], r.sigma[i], r.alpha[i], r.weights[i]};
  p.stats = weight_profile_stats(r.weights, r.t, kPeakFloor);
  return p;
}

std::string weight_profile_csv(std::span<const WeightProfile> profiles) {
  std::string out = "kind,beta,t,sigma,alpha,weight\n";
  for (const WeightProfile& p : profiles)
    for (const ProfileSample& s : p.samples)
      out += std::string(to_string(p.kind)) + "," + fmt(p.beta) + "," + fmt(s.t) + "," + fmt(s.sigma) + "," +
             fmt(s.alpha) + "," + fmt(s.weight) + "\n";
  return out;
}

std::vector<SweepRow> bias_sweep(ToyCase toy, std::span<const double> betas, bool literal_logistic) {
  std::vector<SweepRow> rows;
  for (double beta : betas) {
    for (DensityKind kind : kSweepKinds) {
      const WeightProfile p = weight_profile(toy, kind, beta, literal_logistic);
      rows.push_back({kind, beta, std::abs(p.depth - p.true_depth), p.stats.peak_count});
    }
  }
  return rows;
}

std::string bias_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "kind,beta,depth_error,peak_count\n";
  for (const SweepRow& r : rows)
    out += std::string(to_string(r.kind)) + "," + fmt(r.beta) + "," + fmt(r.depth_error) + "," +
           std::to_string(r.peak_count) + "\n";
  return out;
}

double median_depth_error(std::span<const SweepRow> rows, DensityKind kind) {
  std::vector<double> e;
  for (const SweepRow& r : rows)
    if (r.kind == kind) e.push_back(r.depth_error);
  if (e.empty()) throw ValidationError("median_depth_error: no rows of the requested kind");
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  return n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
}

std::vector<CurvatureRow> curvature_check(std::uint64_t seed, int rays) {
  if (rays <= 0) throw ValidationError("curvature_check needs at least one ray");
  std::vector<CurvatureRow> rows;
  std::mt19937_64 rng(seed);
  for (int dim : {2, 3}) {
    for (double r : {0.1, 1.0, 10.0}) {
      const AnalyticScene scene(dim, {Primitive{Sphere{{0.0, 0.0, 0.0}, r}, {0.5, 0.5, 0.5}}});
      CurvatureRow row;
      row.dimension = dim;
      row.radius = r;
      row.rays = rays;
      const double d = r / 100.0;
      for (int k = 0; k < rays; ++k) {
        // A point outside the surface and a ray heading towards it at an
        // incidence kept away from exactly normal, where the normals coincide.
        auto random_unit = [&]() {
          for (;;) {
            const Vec3 u(uniform(rng, -1, 1), uniform(rng, -1, 1), dim == 3 ? uniform(rng, -1, 1) : 0.0);
            const double n = norm(u);
            if (n > 0.1 && n <= 1.0) return Direction::normalize(u);
          }
        };
        const Direction radial = random_unit();
        const double s = uniform(rng, 0.0, 0.5 * r);
        const Point a = radial.vec() * (r + s);
        Direction v;
        for (;;) {
          v = random_unit();
          const double c = dot(v.vec(), radial.vec());
          if (c < -0.05 && c > -0.99) break;
        }
        const Point b = a + v.vec() * d;
        const CurvatureRadius est = estimate_curvature_radius(eval_normal(scene, a), eval_normal(scene, b), v, d);
        const CurvatureRadius truth = analytic_curvature_radius(scene, a, v);
        const double err = est.is_planar() ? 1.0 : std::abs(est.value() - truth.value()) / std::abs(truth.value());
        row.mean_rel_error += err / rays;
        row.max_rel_error = std::max(row.max_rel_error, err);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string curvature_csv(std::span<const CurvatureRow> rows) {
  std::string out = "shape,radius,rays,mean_rel_error,max_rel_error\n";
  for (const CurvatureRow& r : rows)
    out += std::string(r.dimension == 2 ? "circle" : "sphere") + "," + fmt(r.radius) + "," + std::to_string(r.rays) +
           "," + fmt(r.mean_rel_error) + "," + fmt(r.max_rel_error) + "\n";
  return out;
}

namespace {

using grad::Tape;
using grad::Var;

struct Fixture {
  std::vector<double> params;
  grad::ScalarFunction f;
  // Parameters that must come out detached: exact zero on the tape while the
  // undetached function has a gradient.
  std::vector<std::size_t> detached;
};

using FixtureMaker = std::function<Fixture(std::mt19937_64&)>;

// Values kept away from |x| = 0 so that no fixture sits on a kink.
double away_from(std::mt19937_64& rng, double center, double lo, double hi, double gap) {
  for (;;) {
    const double v = uniform(rng, lo, hi);
    if (std::abs(v - center) > gap) return v;
  }
}

std::array<double, 2> unit2(std::mt19937_64& rng) {
  const double ang = uniform(rng, 0.0, 6.283185307179586);
  return {std::cos(ang), std::sin(ang)};
}

GradCheckRow run_term(const std::string& name, const FixtureMaker& make, std::mt19937_64& rng, int fixtures,
                      double tolerance) {
  GradCheckRow row;
  row.term = name;
  row.fixtures = fixtures;
  for (int k = 0; k < fixtures; ++k) {
    const Fixture fx = make(rng);
    const grad::FiniteDiffReport rep = grad::finite_diff_check(fx.f, fx.params, 1e-5, tolerance);
    for (const grad::ParamCheck& c : rep.params) {
      const bool must_detach = std::find(fx.detached.begin(), fx.detached.end(), c.index) != fx.detached.end();
      switch (c.status) {
        case grad::ParamCheck::Status::ok:
          ++row.checked;
          if (must_detach) row.passed = false;
          break;
        case grad::ParamCheck::Status::mismatch:
          ++row.checked;
          row.passed = false;
          break;
        case grad::ParamCheck::Status::expected_detached:
          ++row.detached;
          if (!must_detach) row.passed = false;
          if (c.tape_gradient != 0.0) {
            ++row.detached_nonzero;
            row.passed = false;
          }
          break;
        case grad::ParamCheck::Status::non_differentiable:
          ++row.non_differentiable;
          row.passed = false;
          break;
      }
      if (c.status == grad::ParamCheck::Status::ok || c.status == grad::ParamCheck::Status::mismatch)
        row.max_rel_error = std::max(row.max_rel_error, c.relative_error);
    }
  }
  return row;
}

// The head's hand-written input Jacobian and parameter gradient against
// central differences of eval().
GradCheckRow run_head(std::mt19937_64& rng, int fixtures, double tolerance) {
  GradCheckRow row;
  row.term = "uncertainty_head";
  row.fixtures = fixtures;
  constexpr double h = 1e-5;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); };
  auto note = [&](double analytic, double numeric) {
    const double e = rel(analytic, numeric);
    ++row.checked;
    row.max_rel_error = std::max(row.max_rel_error, e);
    if (e > tolerance) row.passed = false;
  };
  for (int k = 0; k < fixtures; ++k) {
    UncertaintyHead head(8, 16);
    head.init(rng(), 0.3);
    for (double& p : head.params()) p += uniform(rng, -0.2, 0.2);
    std::vector<double> in(8);
    for (double& x : in) x = uniform(rng, -1.0, 1.0);
    std::array<double, UncertaintyHead::kOutputs> dout{};
    for (double& d : dout) d = uniform(rng, -1.0, 1.0);
    auto weighted = [&](const UncertaintyHead& hd, const std::vector<double>& x) {
      const auto o = hd.eval(x);
      double v = 0.0;
      for (int j = 0; j < UncertaintyHead::kOutputs; ++j) v += dout[j] * o[j];
      return v;
    };

    UncertaintyHead::Cache cache;
    head.eval(in, cache);
    const std::vector<double> jac = head.input_jacobian(cache);
    for (int i = 0; i < 8; ++i) {
      double analytic = 0.0;
      for (int j = 0; j < UncertaintyHead::kOutputs; ++j) analytic += dout[j] * jac[static_cast<std::size_t>(j * 8 + i)];
      std::vector<double> xp = in, xm = in;
      xp[static_cast<std::size_t>(i)] += h;
      xm[static_cast<std::size_t>(i)] -= h;
      note(analytic, (weighted(head, xp) - weighted(head, xm)) / (2.0 * h));
    }

    std::vector<double> g(head.param_count(), 0.0);
    head.accumulate_param_grad(cache, dout, g);
    // A fixed stride keeps the check cheap while touching every layer.
    for (std::size_t p = k % 7; p < head.param_count(); p += 7) {
      UncertaintyHead hp = head, hm = head;
      hp.params()[p] += h;
      hm.params()[p] -= h;
      note(g[p], (weighted(hp, in) - weighted(hm, in)) / (2.0 * h));
    }
  }
  return row;
}

}  // namespace

std::vector<GradCheckRow> grad_check_suite(std::uint64_t seed, int fixtures, double tolerance) {
  if (fixtures <= 0) throw ValidationError("grad_check_suite needs at least one fixture");
  std::mt19937_64 rng(seed);
  const UncertaintyThresholds th;
  std::vector<GradCheckRow> rows;
  auto add = [&](const std::string& name, const FixtureMaker& make) {
    rows.push_back(run_term(name, make, rng, fixtures, tolerance));
  };

  add("rgb", [](std::mt19937_64& r) {
    Fixture fx;
    std::array<double, 3> target{};
    for (int c = 0; c < 3; ++c) {
      target[c] = uniform(r, 0.0, 1.0);
      fx.params.push_back(away_from(r, target[c], 0.0, 1.0, 0.01));
    }
    fx.f = [target](Tape&, std::span<const Var> p) { return rgb_loss<Var>(p, target); };
    return fx;
  });

  add("eikonal", [](std::mt19937_64& r) {
    Fixture fx;
    for (int c = 0; c < 2; ++c) fx.params.push_back(away_from(r, 0.0, -2.0, 2.0, 0.1));
    fx.f = [](Tape&, std::span<const Var> p) { return eikonal_term<Var>(p); };
    return fx;
  });

  add("smooth", [](std::mt19937_64& r) {
    Fixture fx;
    for (int c = 0; c < 4; ++c) fx.params.push_back(uniform(r, -1.5, 1.5));
    fx.params[2] = away_from(r, fx.params[0], -1.5, 1.5, 0.05);
    fx.f = [](Tape&, std::span<const Var> p) { return smooth_term<Var>(p.subspan(0, 2), p.subspan(2, 2)); };
    return fx;
  });

  // Parameters: U_d, D̂. Below τ_d both receive gradients.
  auto depth_fixture = [&th](bool detach) {
    return [&th, detach](std::mt19937_64& r) {
      Fixture fx;
      const double u = detach ? uniform(r, th.tau_d + 0.05, 2.0) : uniform(r, 0.02, th.tau_d - 0.01);
      const double d = uniform(r, 0.5, 3.0);
      fx.params = {u, away_from(r, d, 0.3, 3.5, 0.01)};
      if (detach) fx.detached = {1};
      const double tau = th.tau_d;
      fx.f = [d, tau](Tape&, std::span<const Var> p) { return masked_depth_loss<Var>(p[0], p[1], Var(d), tau).value; };
      return fx;
    };
  };
  add("masked_depth", depth_fixture(false));
  add("masked_depth_detached", depth_fixture(true));

  // Parameters: U_n, N̂x, N̂y.
  auto normal_fixture = [&th](bool detach) {
    return [&th, detach](std::mt19937_64& r) {
      Fixture fx;
      const double u = detach ? uniform(r, th.tau_n + 0.05, 2.0) : uniform(r, 0.05, th.tau_n - 0.01);
      const auto n = unit2(r);
      const auto m = unit2(r);
      const double scale = uniform(r, 0.5, 1.0);
      fx.params = {u, scale * m[0], scale * m[1]};
      if (std::hypot(fx.params[1] - n[0], fx.params[2] - n[1]) < 0.05) fx.params[1] += 0.2;
      if (detach) fx.detached = {1, 2};
      const double tau = th.tau_n;
      fx.f = [n, tau](Tape&, std::span<const Var> p) {
        return masked_normal_loss<Var>(p[0], p.subspan(1, 2), n, tau).value;
      };
      return fx;
    };
  };
  add("masked_normal", normal_fixture(false));
  add("masked_normal_detached", normal_fixture(true));

  add("depth_prior", [](std::mt19937_64& r) {
    Fixture fx;
    const double d = uniform(r, 0.5, 3.0);
    fx.params = {uniform(r, 0.3, 3.5)};
    fx.f = [d](Tape&, std::span<const Var> p) { return depth_prior_loss<Var>(p[0], Var(d)); };
    return fx;
  });

  add("normal_prior", [](std::mt19937_64& r) {
    Fixture fx;
    const auto n = unit2(r);
    fx.params = {away_from(r, n[0], -1.0, 1.0, 0.02), away_from(r, n[1], -1.0, 1.0, 0.02)};
    // Keep N̂·N away from 1, the kink of |1 − N̂·N|.
    if (std::abs(1.0 - (fx.params[0] * n[0] + fx.params[1] * n[1])) < 0.02) fx.params[0] = -fx.params[0];
    fx.f = [n](Tape&, std::span<const Var> p) { return normal_prior_loss<Var>(p, n); };
    return fx;
  });

  add("blend_uncertainty", [&th](std::mt19937_64& r) {
    Fixture fx;
    fx.params = {uniform(r, 0.01, 2.0), uniform(r, 0.01, 2.0)};
    const double lambda = th.lambda;
    fx.f = [lambda](Tape&, std::span<const Var> p) { return blend_uncertainty<Var>(p[0], p[1], lambda); };
    return fx;
  });

  add("density_laplace", [](std::mt19937_64& r) {
    Fixture fx;
    const double beta = uniform(r, 0.01, 0.1);
    fx.params = {away_from(r, 0.0, -3.0 * beta, 3.0 * beta, 1e-3)};
    fx.f = [beta](Tape&, std::span<const Var> p) { return density_laplace<Var>(p[0], beta); };
    return fx;
  });

  add("density_logistic", [](std::mt19937_64& r) {
    Fixture fx;
    const double beta = uniform(r, 0.01, 0.1);
    fx.params = {uniform(r, -3.0 * beta, 3.0 * beta)};
    fx.f = [beta](Tape&, std::span<const Var> p) { return density_logistic<Var>(p[0], beta); };
    return fx;
  });

  // Parameters: s, cos θ.
  add("map_tuvr", [](std::mt19937_64& r) {
    Fixture fx;
    fx.params = {uniform(r, -0.3, 0.3), away_from(r, 0.0, -1.0, 1.0, 0.05)};
    fx.f = [](Tape&, std::span<const Var> p) { return map_tuvr<Var>(p[0], p[1]); };
    return fx;
  });

  add("map_debsdf", [](std::mt19937_64& r) {
    for (;;) {
      Fixture fx;
      const double a = (r() & 1 ? 1.0 : -1.0) * uniform(r, 0.1, 5.0);
      const double p_exp = uniform(r, 0.2, 1.0);
      const double s = uniform(r, -0.05, 0.05);
      const double c = uniform(r, 0.1, 0.95) * (r() & 1 ? 1.0 : -1.0);
      // Skip fixtures next to the intersect / no-intersect switch, where the
      // second derivative jumps and a central difference straddles it.
      const double ce = std::pow(std::abs(c), p_exp);
      const double sin_abs = std::sqrt(1.0 - ce * ce);
      const double margin = std::abs(std::abs(a) - std::abs(a + s) * sin_abs);
      if (margin < 1e-3 || std::abs(a + s) < 1e-3) continue;
      fx.params = {s, c};
      const CurvatureRadius cr = CurvatureRadius::finite(a);
      fx.f = [cr, p_exp](Tape&, std::span<const Var> p) { return map_debsdf<Var>(p[0], p[1], cr, p_exp); };
      return fx;
    }
  });

  add("density_debsdf", [](std::mt19937_64& r) {
    for (;;) {
      Fixture fx;
      const double beta = uniform(r, 0.02, 0.1);
      const double a = uniform(r, 0.2, 3.0);
      const double s = uniform(r, -0.05, 0.05);
      const double c = -uniform(r, 0.2, 0.95);
      const double sin_abs = std::sqrt(1.0 - c * c);
      if (std::abs(std::abs(a) - std::abs(a + s) * sin_abs) < 1e-3) continue;
      fx.params = {s, c};
      DensityConfig cfg;
      cfg.kind = DensityKind::debsdf;
      cfg.beta = beta;
      const CurvatureRadius cr = CurvatureRadius::finite(a);
      fx.f = [cfg, cr](Tape&, std::span<const Var> p) { return density_of<Var>(cfg, p[0], p[1], cr); };
      return fx;
    }
  });

  rows.push_back(run_head(rng, fixtures, tolerance));
  return rows;
}

std::string grad_check_csv(std::span<const GradCheckRow> rows) {
  std::string out = "term,fixtures,checked,detached,detached_nonzero,non_differentiable,max_rel_error,passed\n";
  for (const GradCheckRow& r : rows)
    out += r.term + "," + std::to_string(r.fixtures) + "," + std::to_string(r.checked) + "," +
           std::to_string(r.detached) + "," + std::to_string(r.detached_nonzero) + "," +
           std::to_string(r.non_differentiable) + "," + fmt(r.max_rel_error) + "," + (r.passed ? "1" : "0") + "\n";
  return out;
}

}  // namespace debsdf
