#include "debsdf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "debsdf/errors.hpp"

namespace debsdf::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(v) : v;
    return b > a ? (x - a) / (b - a) : 0.5;
  }
};

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Series& s : series)
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) return {0.0, 1.0, false};
  if (hi == lo) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= log ? 0.0 : pad;
    hi += pad;
  }
  if (!log && !use_x) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
         "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart(const LineChart& chart) {
  for (const Series& s : chart.series)
    if (s.x.size() != s.y.size()) throw LengthMismatchError("line_chart: series '" + s.label + "' has x/y mismatch");
  const Axis ax = fit_axis(chart.series, true, chart.log_x);
  const Axis ay = fit_axis(chart.series, false, chart.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

  std::string out = header(kWidth, kHeight);
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(chart.title) + "</text>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    const double xv = ax.log ? std::pow(10.0, std::log10(ax.lo) + f * (std::log10(ax.hi) - std::log10(ax.lo)))
                             : ax.lo + f * (ax.hi - ax.lo);
    const double yv = ay.log ? std::pow(10.0, std::log10(ay.lo) + f * (std::log10(ay.hi) - std::log10(ay.lo)))
                             : ay.lo + f * (ay.hi - ay.lo);
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(xv) +
           "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
           "</text>\n";
  }
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  out += "<text transform=\"translate(16 " + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(chart.y_label) + "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const Series& s = chart.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if ((ax.log && s.x[k] <= 0.0) || (ay.log && s.y[k] <= 0.0)) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.x[k])) + "," + num(py(s.y[k]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
           "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    out += "<line x1=\"" + num(kWidth - kRight + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kWidth - kRight + 32) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kWidth - kRight + 38) + "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
  }
  for (const Marker& m : chart.markers) {
    out += "<circle cx=\"" + num(px(m.x)) + "\" cy=\"" + num(py(m.y)) + "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
    if (!m.label.empty())
      out += "<text x=\"" + num(px(m.x) + 6) + "\" y=\"" + num(py(m.y) - 6) + "\">" + escape(m.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string contour_plot(const std::vector<Polyline>& learned, const std::vector<Polyline>& truth, const Box2& view,
                         const std::vector<FlatlandCamera>& cameras, const std::string& title) {
  constexpr double size = 480.0;
  constexpr double margin = 30.0;
  const double span = std::max(view.x1 - view.x0, view.y1 - view.y0);
  if (!(span > 0.0)) throw ValidationError("contour_plot: empty view box");
  const double scale = size / span;
  auto px = [&](double x) { return margin + (x - view.x0) * scale; };
  auto py = [&](double y) { return margin + (view.y1 - y) * scale; };

  std::string out = header(size + 2 * margin, size + 2 * margin);
  out += "<text x=\"" + num(margin + size / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  out += "<rect x=\"" + num(margin) + "\" y=\"" + num(margin) + "\" width=\"" + num(size) + "\" height=\"" +
         num(size) + "\" fill=\"none\" stroke=\"#bbb\"/>\n";
  auto draw = [&](const std::vector<Polyline>& lines, const char* color, const char* width) {
    for (const Polyline& line : lines) {
      std::string pts;
      for (const Point& p : line) {
        if (!pts.empty()) pts += ' ';
        pts += num(px(p.x)) + "," + num(py(p.y));
      }
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" + width +
             "\" points=\"" + pts + "\"/>\n";
    }
  };
  draw(truth, "black", "1.5");
  draw(learned, "#d62728", "1.2");
  for (const FlatlandCamera& cam : cameras)
    out += "<circle cx=\"" + num(px(cam.center.x)) + "\" cy=\"" + num(py(cam.center.y)) +
           "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace debsdf::svg
