#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "debsdf/flatland.hpp"
#include "debsdf/vec.hpp"

namespace debsdf {

using Polyline = std::vector<Point>;

// Zero contour of f sampled on a (resolution × resolution) lattice over
// `domain`, by marching squares with linear interpolation along cell edges.
// Saddle cells are resolved by the sign of the cell-centre average. Segments
// are chained into polylines; closed loops repeat their first vertex.
std::vector<Polyline> extract_contour(const std::function<double(const Point&)>& f, const Box2& domain,
                                      int resolution);

// Points along the polylines at most `spacing` apart (vertices included).
std::vector<Point> resample(const std::vector<Polyline>& lines, double spacing);

// Symmetric Chamfer distance: mean of the two directed mean nearest-neighbour
// distances. Points of each set are kept only when `keep` accepts them, while
// nearest neighbours are searched in the full opposite set. Returns nullopt
// when either full set is empty or both kept sets are empty.
std::optional<double> chamfer_distance(std::span<const Point> a, std::span<const Point> b,
                                       const std::function<bool(const Point&)>& keep = {});

// Area under the ROC curve of `scores` for the positive `labels`
// (Mann-Whitney, ties count one half). nullopt without both classes.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const bool> labels);

struct RocPoint {
  double threshold = 0.0;  // score ≥ threshold counts as positive
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC curve from the highest threshold down, one point per distinct score,
// starting at (0, 0). Empty without both classes.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> labels);

}  // namespace debsdf
