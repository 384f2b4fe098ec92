#pragma once

#include <optional>
#include <vector>

#include "debsdf/vec.hpp"

namespace debsdf {

struct SdfSample {
  double s = 0.0;  // signed distance, positive outside
  Direction n;     // normalized SDF gradient
  std::optional<std::vector<double>> z;  // feature vector, learnable fields only
};

// Per-point uncertainty scores predicted alongside color.
struct PointUncertainty {
  double u_d = 0.0;
  Vec3 v_n{};
};

// Read-only signed distance field queried by the renderer. Implementations must
// be safe for concurrent const access.
class SdfField {
 public:
  virtual ~SdfField() = default;

  virtual int dimension() const = 0;
  virtual SdfSample sample(const Point& p) const = 0;
  virtual Vec3 albedo(const Point&) const { return {0.5, 0.5, 0.5}; }

  virtual bool has_uncertainty() const { return false; }
  virtual PointUncertainty uncertainty(const Point&, const Direction& /*view*/, const SdfSample&) const { return {}; }
};

}  // namespace debsdf
