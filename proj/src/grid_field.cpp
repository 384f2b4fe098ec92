#include "debsdf/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "debsdf/errors.hpp"
#include "debsdf/uncertainty_head.hpp"

namespace debsdf {

void GridSpec::validate() const {
  if (!(hi > lo)) throw ValidationError("grid domain needs hi > lo");
  if (nodes < 2) throw ValidationError("grid needs at least 2 nodes per axis");
  if (features < 0) throw ValidationError("feature channel count must be >= 0");
}

GridField2D::GridField2D(GridSpec spec) : spec_(spec) {
  spec_.validate();
  params_.assign(static_cast<std::size_t>(node_count()) * static_cast<std::size_t>(4 + spec_.features), 0.0);
  init_albedo(0.5);
}

std::size_t GridField2D::albedo_offset(int channel) const {
  return static_cast<std::size_t>(node_count()) * static_cast<std::size_t>(1 + channel);
}

std::size_t GridField2D::feature_offset(int channel) const {
  return static_cast<std::size_t>(node_count()) * static_cast<std::size_t>(4 + channel);
}

Stencil GridField2D::stencil(const Point& p) const {
  const double h = spec_.spacing();
  const int n = spec_.nodes;
  auto axis = [&](double x, int& cell, double& frac) {
    const double u = (std::clamp(x, spec_.lo, spec_.hi) - spec_.lo) / h;
    cell = std::min(static_cast<int>(std::floor(u)), n - 2);
    frac = u - cell;
  };
  int i = 0;
  int j = 0;
  double fx = 0.0;
  double fy = 0.0;
  axis(p.x, i, fx);
  axis(p.y, j, fy);
  Stencil st;
  st.node = {j * n + i, j * n + i + 1, (j + 1) * n + i, (j + 1) * n + i + 1};
  st.w = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  st.dwx = {-(1 - fy) / h, (1 - fy) / h, -fy / h, fy / h};
  st.dwy = {-(1 - fx) / h, -fx / h, (1 - fx) / h, fx / h};
  return st;
}

Point GridField2D::node_position(int node) const {
  const int n = spec_.nodes;
  const double h = spec_.spacing();
  return {spec_.lo + (node % n) * h, spec_.lo + (node / n) * h, 0.0};
}

double GridField2D::interpolate(std::size_t offset, const Stencil& st) const {
  double v = 0.0;
  for (int k = 0; k < 4; ++k) v += st.w[k] * params_[offset + static_cast<std::size_t>(st.node[k])];
  return v;
}

double GridField2D::sdf(const Point& p) const { return interpolate(sdf_offset(), stencil(p)); }

Vec3 GridField2D::gradient(const Point& p) const {
  const Stencil st = stencil(p);
  Vec3 g;
  for (int k = 0; k < 4; ++k) {
    const double v = params_[sdf_offset() + static_cast<std::size_t>(st.node[k])];
    g.x += st.dwx[k] * v;
    g.y += st.dwy[k] * v;
  }
  return g;
}

std::vector<double> GridField2D::features(const Point& p) const {
  const Stencil st = stencil(p);
  std::vector<double> z(static_cast<std::size_t>(spec_.features));
  for (int c = 0; c < spec_.features; ++c) z[static_cast<std::size_t>(c)] = interpolate(feature_offset(c), st);
  return z;
}

void GridField2D::init_circle(const Point& center, double radius, bool inverted) {
  if (!(radius > 0.0)) throw DomainError("init circle radius must be > 0");
  for (int node = 0; node < node_count(); ++node) {
    const double d = norm(node_position(node) - center) - radius;
    params_[sdf_offset() + static_cast<std::size_t>(node)] = inverted ? -d : d;
  }
}

void GridField2D::init_albedo(double value) {
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(albedo_offset(0)),
            params_.begin() + static_cast<std::ptrdiff_t>(feature_offset(0)), value);
}

void GridField2D::init_features(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  for (std::size_t k = feature_offset(0); k < params_.size(); ++k)
    params_[k] = scale * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
}

void GridField2D::fit_sdf(const SdfField& field) {
  for (int node = 0; node < node_count(); ++node)
    params_[sdf_offset() + static_cast<std::size_t>(node)] = field.sample(node_position(node)).s;
}

SdfSample GridField2D::sample(const Point& p) const {
  SdfSample out;
  const Stencil st = stencil(p);
  out.s = interpolate(sdf_offset(), st);
  Vec3 g;
  for (int k = 0; k < 4; ++k) {
    const double v = params_[sdf_offset() + static_cast<std::size_t>(st.node[k])];
    g.x += st.dwx[k] * v;
    g.y += st.dwy[k] * v;
  }
  out.n = norm(g) > 1e-12 ? Direction::normalize(g) : Direction();
  std::vector<double> z(static_cast<std::size_t>(spec_.features));
  for (int c = 0; c < spec_.features; ++c) z[static_cast<std::size_t>(c)] = interpolate(feature_offset(c), st);
  out.z = std::move(z);
  return out;
}

Vec3 GridField2D::albedo(const Point& p) const {
  const Stencil st = stencil(p);
  return {interpolate(albedo_offset(0), st), interpolate(albedo_offset(1), st), interpolate(albedo_offset(2), st)};
}

PointUncertainty GridField2D::uncertainty(const Point& p, const Direction& view, const SdfSample& s) const {
  if (!head_) return {};
  std::vector<double> in = s.z ? *s.z : features(p);
  in.push_back(view[0]);
  in.push_back(view[1]);
  in.push_back(s.n[0]);
  in.push_back(s.n[1]);
  const auto out = head_->eval(in);
  return {out[0], Vec3(out[1], out[2], 0.0)};
}

}  // namespace debsdf
