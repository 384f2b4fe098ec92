#pragma once

#include <cmath>
#include <limits>

#include "debsdf/errors.hpp"

namespace debsdf {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_ = 0.0) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double k) {
    x *= k;
    y *= k;
    z *= k;
    return *this;
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double k) { return a *= k; }
constexpr Vec3 operator*(double k, Vec3 a) { return a *= k; }
constexpr Vec3 operator/(const Vec3& a, double k) { return {a.x / k, a.y / k, a.z / k}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 abs(const Vec3& a) { return {std::abs(a.x), std::abs(a.y), std::abs(a.z)}; }

using Point = Vec3;

// Unit-length vector. The only way in is through a normalizing factory, so the
// invariant |d| = 1 (to rounding) holds for every instance.
class Direction {
 public:
  constexpr Direction() : v_(1.0, 0.0, 0.0) {}

  static Direction normalize(const Vec3& v) {
    const double n = norm(v);
    if (!(n > 1e-300) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite vector");
    return Direction(v / n);
  }

  // 2D convenience: direction at angle `radians` in the xy-plane.
  static Direction from_angle(double radians) { return Direction(Vec3(std::cos(radians), std::sin(radians), 0.0)); }

  constexpr const Vec3& vec() const { return v_; }
  constexpr operator const Vec3&() const { return v_; }
  constexpr double operator[](int i) const { return v_[i]; }
  constexpr Direction operator-() const { return Direction(-v_); }

 private:
  constexpr explicit Direction(const Vec3& v) : v_(v) {}
  Vec3 v_;
};

struct Ray {
  Point origin;
  Direction direction;
  double near = 0.0;
  double far = 1.0;

  Ray() = default;
  Ray(const Point& o, const Direction& d, double near_, double far_) : origin(o), direction(d), near(near_), far(far_) {
    if (!(near_ >= 0.0) || !(far_ > near_)) throw ValidationError("ray requires far > near >= 0");
  }

  Point at(double t) const { return origin + direction.vec() * t; }
};

}  // namespace debsdf
