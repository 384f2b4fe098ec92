#include "debsdf/contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "debsdf/errors.hpp"

namespace debsdf {

namespace {

// Grid edges are keyed by (lower-left node, axis): axis 0 runs +x, axis 1 runs +y.
using EdgeKey = std::pair<int, int>;

}  // namespace

std::vector<Polyline> extract_contour(const std::function<double(const Point&)>& f, const Box2& domain,
                                      int resolution) {
  if (resolution < 2) throw DomainError("contour resolution must be >= 2");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) throw DomainError("contour domain is empty");
  const int n = resolution;
  const double hx = (domain.x1 - domain.x0) / (n - 1);
  const double hy = (domain.y1 - domain.y0) / (n - 1);
  auto pos = [&](int i, int j) { return Point(domain.x0 + i * hx, domain.y0 + j * hy); };
  std::vector<double> val(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) val[static_cast<std::size_t>(j * n + i)] = f(pos(i, j));
  auto at = [&](int i, int j) { return val[static_cast<std::size_t>(j * n + i)]; };
  // Exact zeros count as positive so each crossing lies strictly on an edge.
  auto inside = [](double v) { return v < 0.0; };

  auto edge_point = [&](const EdgeKey& e) {
    const int i = e.first % n;
    const int j = e.first / n;
    const int i2 = e.second == 0 ? i + 1 : i;
    const int j2 = e.second == 0 ? j : j + 1;
    const double a = at(i, j);
    const double b = at(i2, j2);
    const double t = a / (a - b);
    const Point pa = pos(i, j);
    const Point pb = pos(i2, j2);
    return pa + (pb - pa) * t;
  };

  // Segment list as pairs of edge keys.
  std::vector<std::pair<EdgeKey, EdgeKey>> segments;
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const EdgeKey bottom{j * n + i, 0};
      const EdgeKey top{(j + 1) * n + i, 0};
      const EdgeKey left{j * n + i, 1};
      const EdgeKey right{j * n + i + 1, 1};
      const bool b0 = inside(at(i, j));
      const bool b1 = inside(at(i + 1, j));
      const bool b2 = inside(at(i + 1, j + 1));
      const bool b3 = inside(at(i, j + 1));
      const int code = (b0 ? 1 : 0) | (b1 ? 2 : 0) | (b2 ? 4 : 0) | (b3 ? 8 : 0);
      switch (code) {
        case 0:
        case 15:
          break;
        case 1:
        case 14:
          segments.push_back({left, bottom});
          break;
        case 2:
        case 13:
          segments.push_back({bottom, right});
          break;
        case 3:
        case 12:
          segments.push_back({left, right});
          break;
        case 4:
        case 11:
          segments.push_back({right, top});
          break;
        case 6:
        case 9:
          segments.push_back({bottom, top});
          break;
        case 7:
        case 8:
          segments.push_back({left, top});
          break;
        case 5:
        case 10: {
          const double centre = 0.25 * (at(i, j) + at(i + 1, j) + at(i + 1, j + 1) + at(i, j + 1));
          // Corners 0 and 2 share a sign; join them through the centre when the
          // centre agrees with them.
          const bool centre_like_02 = inside(centre) == b0;
          if (centre_like_02) {
            segments.push_back({left, top});
            segments.push_back({bottom, right});
          } else {
            segments.push_back({left, bottom});
            segments.push_back({right, top});
          }
          break;
        }
        default:
          break;
      }
    }
  }

  // Chain segments through shared edges. Each edge is shared by at most two
  // segments, so the adjacency is a set of paths and cycles.
  std::map<EdgeKey, std::vector<std::size_t>> incident;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    incident[segments[k].first].push_back(k);
    incident[segments[k].second].push_back(k);
  }
  std::vector<bool> used(segments.size(), false);
  auto other_end = [&](std::size_t seg, const EdgeKey& from) {
    return segments[seg].first == from ? segments[seg].second : segments[seg].first;
  };
  auto next_segment = [&](const EdgeKey& e, std::size_t current) -> std::optional<std::size_t> {
    for (std::size_t s : incident[e])
      if (s != current && !used[s]) return s;
    return std::nullopt;
  };

  std::vector<Polyline> lines;
  auto trace = [&](std::size_t start, const EdgeKey& start_edge) {
    Polyline line{edge_point(start_edge)};
    std::size_t seg = start;
    EdgeKey e = start_edge;
    while (true) {
      used[seg] = true;
      e = other_end(seg, e);
      line.push_back(edge_point(e));
      auto nxt = next_segment(e, seg);
      if (!nxt) break;
      seg = *nxt;
    }
    lines.push_back(std::move(line));
  };
  // Open paths first, starting from edges with a single incident segment.
  for (const auto& [edge, segs] : incident)
    if (segs.size() == 1 && !used[segs[0]]) trace(segs[0], edge);
  for (std::size_t k = 0; k < segments.size(); ++k)
    if (!used[k]) trace(k, segments[k].first);
  return lines;
}

std::vector<Point> resample(const std::vector<Polyline>& lines, double spacing) {
  if (!(spacing > 0.0)) throw DomainError("resample spacing must be > 0");
  std::vector<Point> out;
  for (const Polyline& line : lines) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      out.push_back(line[k]);
      if (k + 1 == line.size()) break;
      const Vec3 d = line[k + 1] - line[k];
      const int pieces = static_cast<int>(std::ceil(norm(d) / spacing));
      for (int m = 1; m < pieces; ++m) out.push_back(line[k] + d * (static_cast<double>(m) / pieces));
    }
  }
  return out;
}

std::optional<double> chamfer_distance(std::span<const Point> a, std::span<const Point> b,
                                       const std::function<bool(const Point&)>& keep) {
  if (a.empty() || b.empty()) return std::nullopt;
  auto directed = [&](std::span<const Point> from, std::span<const Point> to, std::size_t& kept) {
    double sum = 0.0;
    kept = 0;
    for (const Point& p : from) {
      if (keep && !keep(p)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const Point& q : to) {
        const double dx = p.x - q.x;
        const double dy = p.y - q.y;
        const double dz = p.z - q.z;
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      sum += std::sqrt(best);
      ++kept;
    }
    return kept ? sum / static_cast<double>(kept) : 0.0;
  };
  std::size_t ka = 0;
  std::size_t kb = 0;
  const double dab = directed(a, b, ka);
  const double dba = directed(b, a, kb);
  if (ka == 0 && kb == 0) return std::nullopt;
  if (ka == 0) return dba;
  if (kb == 0) return dab;
  return 0.5 * (dab + dba);
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw LengthMismatchError("roc_auc: scores/labels length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  // Mid-ranks over tie groups.
  double rank_sum_pos = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) {
        rank_sum_pos += mid;
        ++pos;
      }
    i = j + 1;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double p = static_cast<double>(pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw LengthMismatchError("roc_curve: scores/labels length mismatch");
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return {};
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp) += 1;
      ++j;
    }
    curve.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos)});
    i = j;
  }
  return curve;
}

}  // namespace debsdf
