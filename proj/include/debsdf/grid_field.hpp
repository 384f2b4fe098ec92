#pragma once

#include <array>
#include <span>
#include <vector>

#include "debsdf/field.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

class UncertaintyHead;

struct GridSpec {
  double lo = -1.2;  // square domain [lo, hi]²
  double hi = 1.2;
  int nodes = 48;    // per axis
  int features = 4;  // positional feature channels for the uncertainty head

  double spacing() const { return (hi - lo) / (nodes - 1); }
  void validate() const;
};

// Bilinear weights of the four nodes around a point, with their x/y derivatives.
struct Stencil {
  std::array<int, 4> node{};
  std::array<double, 4> w{};
  std::array<double, 4> dwx{};
  std::array<double, 4> dwy{};
};

// Learnable 2D field: bilinear SDF, albedo (3 channels) and feature grids over
// one node lattice. Points outside the domain are clamped onto it.
//
// Parameter layout: [sdf | albedo c0 c1 c2 | feature f0 .. fF-1], each block
// nodes² long, node index j·nodes + i.
class GridField2D final : public SdfField {
 public:
  explicit GridField2D(GridSpec spec = {});

  const GridSpec& spec() const { return spec_; }
  int node_count() const { return spec_.nodes * spec_.nodes; }
  std::size_t sdf_offset() const { return 0; }
  std::size_t albedo_offset(int channel) const;
  std::size_t feature_offset(int channel) const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Stencil stencil(const Point& p) const;
  Point node_position(int node) const;

  double sdf(const Point& p) const;
  Vec3 gradient(const Point& p) const;  // of the interpolant, not normalized
  std::vector<double> features(const Point& p) const;

  // Circle SDF centred at `center`; inverted (positive inside) when the
  // cameras sit inside the circle.
  void init_circle(const Point& center, double radius, bool inverted);
  void init_albedo(double value);
  void init_features(std::uint64_t seed, double scale);
  // Fill the SDF block from any field, e.g. a ground-truth scene.
  void fit_sdf(const SdfField& field);

  void attach_head(const UncertaintyHead* head) { head_ = head; }

  int dimension() const override { return 2; }
  SdfSample sample(const Point& p) const override;
  Vec3 albedo(const Point& p) const override;
  bool has_uncertainty() const override { return head_ != nullptr; }
  PointUncertainty uncertainty(const Point& p, const Direction& view, const SdfSample& s) const override;

 private:
  double interpolate(std::size_t offset, const Stencil& st) const;

  GridSpec spec_;
  std::vector<double> params_;
  const UncertaintyHead* head_ = nullptr;
};

}  // namespace debsdf
