#ifndef MOFLP_METRICS_HPP
#define MOFLP_METRICS_HPP

#include <vector>

#include "moflp/flp.hpp"

namespace moflp {

/// Point in minimization orientation: (C_total, -R_sys).
struct MinPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const MinPoint&) const = default;
};

/// Orientation map for the indicators. Strictly monotone: a dominates b in
/// objective space iff to_min_space(a) Pareto-dominates (min-min)
/// to_min_space(b).
MinPoint to_min_space(const ObjectivePoint& p);
ObjectivePoint from_min_space(const MinPoint& p);

/// Exact area dominated by `points` and bounded by `reference` (min-min
/// orientation). Points that do not strictly dominate the reference
/// contribute zero.
double hypervolume_2d(std::vector<MinPoint> points, const MinPoint& reference);

/// Inverted generational distance: mean Euclidean distance from each
/// reference point to its nearest obtained point. Returns +infinity for an
/// empty obtained set; throws DomainError on an empty reference front.
double igd(const std::vector<MinPoint>& reference_front,
           const std::vector<MinPoint>& obtained);

/// Per-instance normalization frame built from a reference front: the frame
/// maps the front's ideal point to (0,0) and its nadir to (1,1); degenerate
/// zero-range coordinates map to 0. The hypervolume reference point is fixed
/// at (1.1, 1.1) in normalized space.
struct NormalizationFrame {
  MinPoint ideal;
  MinPoint nadir;
  MinPoint reference_point{1.1, 1.1};

  MinPoint normalize(const MinPoint& p) const;
  std::vector<MinPoint> normalize(const std::vector<MinPoint>& pts) const;
};

/// Throws DomainError on an empty reference front.
NormalizationFrame make_frame(const std::vector<ObjectivePoint>& reference_front);

}  // namespace moflp

#endif  // MOFLP_METRICS_HPP
