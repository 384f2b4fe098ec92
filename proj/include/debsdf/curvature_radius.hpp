#pragma once

#include <limits>
#include <ostream>

namespace debsdf {

// Signed curvature radius, or the symbolic planar value (zero curvature).
//
// Sign convention: positive when the surface bulges toward the viewer, i.e. the
// center of curvature lies beyond the surface as seen along the ray (a convex
// sphere viewed from outside). Negative for concave surfaces such as the inside
// of a room.
class CurvatureRadius {
 public:
  static constexpr CurvatureRadius planar() { return CurvatureRadius(); }
  static constexpr CurvatureRadius finite(double r) { return CurvatureRadius(r); }

  constexpr bool is_planar() const { return planar_; }
  // +infinity for the planar value so ordering comparisons stay meaningful.
  constexpr double value() const { return planar_ ? std::numeric_limits<double>::infinity() : r_; }

  friend constexpr bool operator==(const CurvatureRadius& a, const CurvatureRadius& b) {
    return a.planar_ == b.planar_ && (a.planar_ || a.r_ == b.r_);
  }

  friend std::ostream& operator<<(std::ostream& os, const CurvatureRadius& c) {
    if (c.planar_) return os << "planar";
    return os << c.r_;
  }

 private:
  constexpr CurvatureRadius() : planar_(true), r_(0.0) {}
  constexpr explicit CurvatureRadius(double r) : planar_(false), r_(r) {}
  bool planar_;
  double r_;
};

}  // namespace debsdf
