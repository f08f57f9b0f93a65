#include "moflp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moflp/errors.hpp"

namespace moflp {

MinPoint to_min_space(const ObjectivePoint& p) { return {p.f1, -p.f2}; }

ObjectivePoint from_min_space(const MinPoint& p) { return {p.x, -p.y}; }

double hypervolume_2d(std::vector<MinPoint> points, const MinPoint& reference) {
  // Strictly dominating points only; everything else spans zero area.
  std::erase_if(points, [&](const MinPoint& p) {
    return !(p.x < reference.x && p.y < reference.y);
  });
  if (points.empty()) return 0.0;

  std::sort(points.begin(), points.end(), [](const MinPoint& a, const MinPoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });

  // Lower staircase: strictly increasing x, strictly decreasing y.
  std::vector<MinPoint> stairs;
  for (const auto& p : points) {
    if (stairs.empty() || p.y < stairs.back().y) stairs.push_back(p);
  }

  double area = 0.0;
  for (std::size_t k = 0; k < stairs.size(); ++k) {
    const double next_x = (k + 1 < stairs.size()) ? stairs[k + 1].x : reference.x;
    area += (next_x - stairs[k].x) * (reference.y - stairs[k].y);
  }
  return area;
}

double igd(const std::vector<MinPoint>& reference_front,
           const std::vector<MinPoint>& obtained) {
  if (reference_front.empty()) throw DomainError("igd requires a non-empty reference front");
  if (obtained.empty()) return std::numeric_limits<double>::infinity();

  double total = 0.0;
  for (const auto& r : reference_front) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : obtained) {
      const double dx = r.x - o.x;
      const double dy = r.y - o.y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    total += best;
  }
  return total / static_cast<double>(reference_front.size());
}

MinPoint NormalizationFrame::normalize(const MinPoint& p) const {
  const double rx = nadir.x - ideal.x;
  const double ry = nadir.y - ideal.y;
  return {rx > 0.0 ? (p.x - ideal.x) / rx : 0.0,
          ry > 0.0 ? (p.y - ideal.y) / ry : 0.0};
}

std::vector<MinPoint> NormalizationFrame::normalize(const std::vector<MinPoint>& pts) const {
  std::vector<MinPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(normalize(p));
  return out;
}

NormalizationFrame make_frame(const std::vector<ObjectivePoint>& reference_front) {
  if (reference_front.empty()) throw DomainError("make_frame requires a non-empty front");
  NormalizationFrame frame;
  frame.ideal = {std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity()};
  frame.nadir = {-std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
  for (const auto& op : reference_front) {
    const MinPoint p = to_min_space(op);
    frame.ideal.x = std::min(frame.ideal.x, p.x);
    frame.ideal.y = std::min(frame.ideal.y, p.y);
    frame.nadir.x = std::max(frame.nadir.x, p.x);
    frame.nadir.y = std::max(frame.nadir.y, p.y);
  }
  return frame;
}

}  // namespace moflp
