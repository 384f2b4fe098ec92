#pragma once

// Static SVG charts written directly as text: line plots and flatland
// contour overlays. Output is self-contained (no scripts, fonts or links) and
// byte-stable for identical input.

#include <string>
#include <vector>

#include "debsdf/contour.hpp"
#include "debsdf/flatland.hpp"

namespace debsdf::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;  // drawn on top, e.g. detected peaks
  bool log_x = false;
  bool log_y = false;
};

std::string line_chart(const LineChart& chart);

// Learned (red) and ground-truth (black) zero contours over `view`, with the
// camera centres as dots.
std::string contour_plot(const std::vector<Polyline>& learned, const std::vector<Polyline>& truth, const Box2& view,
                         const std::vector<FlatlandCamera>& cameras, const std::string& title);

// Escapes &, <, >, " and ' for text and attribute content.
std::string escape(const std::string& text);

}  // namespace debsdf::svg
