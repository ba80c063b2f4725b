#pragma once

#include <array>
#include <vector>

#include "pvrisk/core/types.hpp"
#include "pvrisk/vec2.hpp"

namespace pvrisk {

struct Box {
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
  Vec2 center() const { return (min + max) * 0.5; }
};

using Polygon = std::vector<Vec2>;

/// Even-odd rule; points on an edge count as inside.
bool contains(const Polygon& polygon, Vec2 p);

/// Rectangle around segment a-b, extended by `margin` past both ends and on
/// both sides.
Polygon inflate_segment(Vec2 a, Vec2 b, double margin);

/// Convex hull (counterclockwise, no collinear points).
Polygon convex_hull(std::vector<Vec2> points);

/// Eight crosswalk endpoints, listed clockwise starting at the west end of the
/// north crosswalk:
///
///   0 north-crosswalk west end   1 north-crosswalk east end
///   2 east-crosswalk north end   3 east-crosswalk south end
///   4 south-crosswalk east end   5 south-crosswalk west end
///   6 west-crosswalk south end   7 west-crosswalk north end
///
/// The corner points (mean of the two endpoints meeting at a corner) define
/// two diagonals SW-NE and SE-NW. Their crossing is the center; rays from the
/// center to the corners bound four wedges, each labeled by the approach it
/// contains. A point exactly on a ray belongs to the wedge counterclockwise of
/// it.
class IntersectionGeometry {
 public:
  explicit IntersectionGeometry(const std::array<Vec2, 8>& endpoints);

  const std::array<Vec2, 8>& endpoints() const { return endpoints_; }
  Vec2 center() const { return center_; }
  Vec2 corner_ne() const { return corners_[0]; }
  Vec2 corner_nw() const { return corners_[1]; }
  Vec2 corner_sw() const { return corners_[2]; }
  Vec2 corner_se() const { return corners_[3]; }

  /// Endpoints of the crosswalk across the given approach.
  std::array<Vec2, 2> crosswalk(Direction approach) const;

  Direction quadrant_of(Vec2 p) const;

 private:
  std::array<Vec2, 8> endpoints_;
  std::array<Vec2, 4> corners_;  // NE, NW, SW, SE (counterclockwise)
  std::array<double, 4> corner_angles_;
  Vec2 center_;
};

}  // namespace pvrisk
