#include "debsdf/sdf_scene.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_io.hpp"

namespace debsdf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

struct BoxFrame {
  Vec3 offset;  // p - center
  Vec3 q;       // |offset| - half extents; z = -inf in 2D
};

BoxFrame box_frame(const Box& b, const Point& p, int dim) {
  const Vec3 c = (b.lo + b.hi) * 0.5;
  const Vec3 h = (b.hi - b.lo) * 0.5;
  BoxFrame f;
  f.offset = p - c;
  f.q = abs(f.offset) - h;
  if (dim == 2) f.q.z = -kInf;
  return f;
}

double box_sdf(const Box& b, const Point& p, int dim) {
  const auto f = box_frame(b, p, dim);
  const Vec3 outside{std::max(f.q.x, 0.0), std::max(f.q.y, 0.0), std::max(f.q.z, 0.0)};
  const double inside = std::min(std::max({f.q.x, f.q.y, f.q.z}), 0.0);
  return norm(outside) + inside;
}

// Zero vector where the gradient is undefined.
Vec3 box_gradient(const Box& b, const Point& p, int dim, double tie_tol) {
  const auto f = box_frame(b, p, dim);
  const int axes = dim;
  bool outside = false;
  Vec3 g;
  for (int i = 0; i < axes; ++i) {
    if (f.q[i] > 0.0) {
      outside = true;
      g[i] = sign_of(f.offset[i]) * f.q[i];
    }
  }
  if (outside) return g / norm(g);
  int best = 0;
  for (int i = 1; i < axes; ++i)
    if (f.q[i] > f.q[best]) best = i;
  for (int i = 0; i < axes; ++i)
    if (i != best && f.q[best] - f.q[i] < tie_tol) return {};
  Vec3 e;
  e[best] = sign_of(f.offset[best]);
  return e;
}

}  // namespace

AnalyticScene::AnalyticScene(int dimension, std::vector<Primitive> primitives)
    : dimension_(dimension), primitives_(std::move(primitives)) {
  if (dimension_ != 2 && dimension_ != 3) throw ValidationError("scene dimension must be 2 or 3");
  if (primitives_.empty()) throw ValidationError("scene needs at least one primitive");
  for (std::size_t i = 0; i < primitives_.size(); ++i) {
    const std::string where = "primitive " + std::to_string(i) + ": ";
    std::visit(Overloaded{[&](const Sphere& s) {
                            if (!(s.radius > 0.0)) throw ValidationError(where + "sphere radius must be > 0");
                            if (dimension_ == 2 && s.center.z != 0.0) throw ValidationError(where + "2D center needs z = 0");
                          },
                          [&](const Plane& pl) {
                            if (std::abs(norm(pl.normal) - 1.0) > 1e-9) throw ValidationError(where + "plane normal must be unit length");
                            if (dimension_ == 2 && pl.normal.z != 0.0) throw ValidationError(where + "2D normal needs z = 0");
                          },
                          [&](const Box& b) {
                            for (int k = 0; k < dimension_; ++k)
                              if (!(b.hi[k] > b.lo[k])) throw ValidationError(where + "box needs max > min on every axis");
                          }},
               primitives_[i].shape);
  }
}

double AnalyticScene::primitive_sdf(std::size_t i, const Point& p) const {
  return std::visit(Overloaded{[&](const Sphere& s) { return norm(p - s.center) - s.radius; },
                               [&](const Plane& pl) { return dot(p - pl.point, pl.normal); },
                               [&](const Box& b) { return box_sdf(b, p, dimension_); }},
                    primitives_[i].shape);
}

Vec3 AnalyticScene::primitive_gradient(std::size_t i, const Point& p) const {
  return std::visit(Overloaded{[&](const Sphere& s) {
                                 const Vec3 d = p - s.center;
                                 const double n = norm(d);
                                 return n < 1e-12 ? Vec3{} : d / n;
                               },
                               [&](const Plane& pl) { return pl.normal; },
                               [&](const Box& b) { return box_gradient(b, p, dimension_, kBlendTolerance); }},
                    primitives_[i].shape);
}

AnalyticScene::Owner AnalyticScene::owner(const Point& p) const {
  Owner o{0, kInf, kInf};
  for (std::size_t i = 0; i < primitives_.size(); ++i) {
    const double d = primitive_sdf(i, p);
    if (d < o.distance) {
      o.runner_up = o.distance;
      o.distance = d;
      o.index = i;
    } else if (d < o.runner_up) {
      o.runner_up = d;
    }
  }
  return o;
}

double AnalyticScene::sdf(const Point& p) const { return owner(p).distance; }

Direction AnalyticScene::normal(const Point& p) const {
  const Owner o = owner(p);
  if (o.runner_up - o.distance < kBlendTolerance) throw UnsupportedRegionError("normal query inside a union blend zone");
  const Vec3 g = primitive_gradient(o.index, p);
  if (norm(g) < 1e-12) throw SingularPointError("SDF gradient undefined at query point");
  return Direction::normalize(g);
}

SdfSample AnalyticScene::sample(const Point& p) const {
  const Owner o = owner(p);
  Vec3 g = primitive_gradient(o.index, p);
  if (norm(g) < 1e-12) g = Vec3{1.0, 0.0, 0.0};
  return {o.distance, Direction::normalize(g), std::nullopt};
}

Vec3 AnalyticScene::albedo(const Point& p) const { return primitives_[owner(p).index].albedo; }

CurvatureRadius AnalyticScene::curvature_radius(const Point& p, const Direction& v) const {
  const Owner o = owner(p);
  if (o.runner_up - o.distance < kBlendTolerance)
    throw UnsupportedRegionError("curvature query inside a union blend zone");
  const double s = o.distance;
  return std::visit(
      Overloaded{[&](const Sphere& sp) -> CurvatureRadius {
                   if (norm(p - sp.center) < 1e-12) throw SingularPointError("curvature undefined at sphere center");
                   // Level set through p is a concentric sphere of radius r + s.
                   return CurvatureRadius::finite(sp.radius + s);
                 },
                 [&](const Plane&) { return CurvatureRadius::planar(); },
                 [&](const Box& b) -> CurvatureRadius {
                   const auto f = box_frame(b, p, dimension_);
                   int positive = 0;
                   int straight_axis = -1;
                   for (int k = 0; k < dimension_; ++k) {
                     if (f.q[k] > 0.0)
                       ++positive;
                     else
                       straight_axis = k;
                   }
                   if (positive == 0) {
                     if (norm(box_gradient(b, p, dimension_, kBlendTolerance)) == 0.0)
                       throw UnsupportedRegionError("curvature query on the box medial axis");
                     return CurvatureRadius::planar();
                   }
                   if (positive == 1) return CurvatureRadius::planar();
                   // Corner of a rectangle, or corner of a 3D box: round level set of radius s.
                   if (positive == dimension_) return CurvatureRadius::finite(s);
                   // 3D edge region: cylinder of radius s around the edge.
                   const Vec3 n = box_gradient(b, p, dimension_, kBlendTolerance);
                   Vec3 axis;
                   axis[straight_axis] = 1.0;
                   const Vec3 tangent = v.vec() - n * dot(v.vec(), n);
                   const double tn = norm(tangent);
                   if (tn < 1e-12) throw SingularPointError("view direction parallel to the normal");
                   const double c = dot(tangent / tn, Direction::normalize(cross(axis, n)).vec());
                   if (c * c < 1e-12) return CurvatureRadius::planar();
                   return CurvatureRadius::finite(s / (c * c));
                 }},
      primitives_[o.index].shape);
}

std::optional<SurfaceHit> AnalyticScene::intersect(const Ray& ray) const {
  const Point& o = ray.origin;
  const Vec3& d = ray.direction.vec();
  double best_t = kInf;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < primitives_.size(); ++i) {
    const double t = std::visit(
        Overloaded{[&](const Sphere& s) {
                     const Vec3 oc = o - s.center;
                     const double b = dot(d, oc);
                     const double c = dot(oc, oc) - s.radius * s.radius;
                     const double disc = b * b - c;
                     if (c <= 0.0 || disc < 0.0) return kInf;
                     return -b - std::sqrt(disc);
                   },
                   [&](const Plane& pl) {
                     const double side = dot(o - pl.point, pl.normal);
                     const double denom = dot(d, pl.normal);
                     if (side <= 0.0 || denom >= 0.0) return kInf;
                     return -side / denom;
                   },
                   [&](const Box& b) {
                     double t_enter = -kInf;
                     double t_exit = kInf;
                     for (int k = 0; k < dimension_; ++k) {
                       if (std::abs(d[k]) < 1e-300) {
                         if (o[k] < b.lo[k] || o[k] > b.hi[k]) return kInf;
                         continue;
                       }
                       double t0 = (b.lo[k] - o[k]) / d[k];
                       double t1 = (b.hi[k] - o[k]) / d[k];
                       if (t0 > t1) std::swap(t0, t1);
                       t_enter = std::max(t_enter, t0);
                       t_exit = std::min(t_exit, t1);
                     }
                     if (t_enter > t_exit || t_enter <= 0.0) return kInf;
                     return t_enter;
                   }},
        primitives_[i].shape);
    if (t > ray.near && t <= ray.far && t < best_t) {
      best_t = t;
      best_i = i;
    }
  }
  if (best_t == kInf) return std::nullopt;
  SurfaceHit hit;
  hit.t = best_t;
  hit.point = ray.at(best_t);
  hit.primitive = best_i;
  Vec3 g = primitive_gradient(best_i, hit.point);
  if (norm(g) < 1e-12) g = -d;  // box edge or corner exactly
  hit.normal = Direction::normalize(g);
  hit.albedo = primitives_[best_i].albedo;
  return hit;
}

double eval_sdf(const AnalyticScene& scene, const Point& p) { return scene.sdf(p); }
Direction eval_normal(const AnalyticScene& scene, const Point& p) { return scene.normal(p); }
CurvatureRadius analytic_curvature_radius(const AnalyticScene& scene, const Point& p, const Direction& v) {
  return scene.curvature_radius(p, v);
}

// ---------------------------------------------------------------------------
// JSON loading

using nlohmann::json;
using namespace jsonio;

AnalyticScene jsonio::scene_from_json(const json& doc, const std::string& root) {
  if (!doc.is_object()) throw ParseError(root.empty() ? "/" : root, "scene must be a JSON object");
  reject_unknown(doc, {"dimension", "primitives"}, root);
  int dim = 3;
  if (auto it = doc.find("dimension"); it != doc.end()) {
    if (!it->is_number_integer()) throw ParseError(root + "/dimension", "expected 2 or 3");
    dim = it->get<int>();
    if (dim != 2 && dim != 3) throw ValidationError(root + "/dimension: expected 2 or 3");
  }
  const json& list = require(doc, "primitives", root);
  if (!list.is_array()) throw ParseError(root + "/primitives", "expected an array");
  std::vector<Primitive> prims;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = root + "/primitives/" + std::to_string(i);
    const json& entry = list[i];
    if (!entry.is_object() || entry.size() != 1) throw ParseError(where, "expected exactly one of sphere, plane, box");
    const std::string kind = entry.begin().key();
    const json& body = entry.begin().value();
    const std::string at = where + "/" + kind;
    if (!body.is_object()) throw ParseError(at, "expected an object");
    Primitive prim;
    if (kind == "sphere") {
      reject_unknown(body, {"center", "radius", "albedo"}, at);
      Sphere s{vector_of(require(body, "center", at), dim, at + "/center"), number(require(body, "radius", at), at + "/radius")};
      if (!(s.radius > 0.0)) throw ValidationError(at + "/radius: must be > 0");
      prim.shape = s;
    } else if (kind == "plane") {
      reject_unknown(body, {"point", "normal", "albedo"}, at);
      Plane p{vector_of(require(body, "point", at), dim, at + "/point"), vector_of(require(body, "normal", at), dim, at + "/normal")};
      if (std::abs(norm(p.normal) - 1.0) > 1e-9) throw ValidationError(at + "/normal: must be unit length");
      prim.shape = p;
    } else if (kind == "box") {
      reject_unknown(body, {"min", "max", "albedo"}, at);
      prim.shape = Box{vector_of(require(body, "min", at), dim, at + "/min"), vector_of(require(body, "max", at), dim, at + "/max")};
    } else {
      throw ParseError(where + "/" + kind, "unknown primitive kind");
    }
    prim.albedo = albedo_of(body, at);
    prims.push_back(std::move(prim));
  }
  if (prims.empty()) throw ValidationError(root + "/primitives: must not be empty");
  return AnalyticScene(dim, std::move(prims));
}

AnalyticScene load_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  return scene_from_json(doc, "");
}

AnalyticScene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scene(ss.str());
}

}  // namespace debsdf
