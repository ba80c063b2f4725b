#include "pvrisk/preprocess/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "pvrisk/errors.hpp"

namespace pvrisk {

bool contains(const Polygon& polygon, Vec2 p) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    // On-edge test first so boundary points are deterministic.
    const Vec2 ab = b - a;
    const Vec2 ap = p - a;
    if (std::abs(ab.cross(ap)) <= 1e-12 * std::max(1.0, ab.norm()) && ap.dot(ab) >= 0.0 &&
        ap.dot(ab) <= ab.squared_norm())
      return true;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

Polygon inflate_segment(Vec2 a, Vec2 b, double margin) {
  Vec2 dir = b - a;
  const double len = dir.norm();
  dir = len > 0.0 ? dir / len : Vec2{1.0, 0.0};
  const Vec2 normal{-dir.y, dir.x};
  const Vec2 a2 = a - dir * margin;
  const Vec2 b2 = b + dir * margin;
  return {a2 - normal * margin, b2 - normal * margin, b2 + normal * margin, a2 + normal * margin};
}

Polygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Polygon hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && (hull[k - 1] - hull[k - 2]).cross(pts[i - 1] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

}  // namespace

IntersectionGeometry::IntersectionGeometry(const std::array<Vec2, 8>& endpoints) : endpoints_(endpoints) {
  for (const auto& e : endpoints_)
    if (!std::isfinite(e.x) || !std::isfinite(e.y)) throw InputError("geometry: non-finite crosswalk endpoint");

  const Vec2 ne = (endpoints_[1] + endpoints_[2]) * 0.5;
  const Vec2 se = (endpoints_[3] + endpoints_[4]) * 0.5;
  const Vec2 sw = (endpoints_[5] + endpoints_[6]) * 0.5;
  const Vec2 nw = (endpoints_[7] + endpoints_[0]) * 0.5;
  corners_ = {ne, nw, sw, se};

  // Solve sw + s*(ne - sw) = se + u*(nw - se).
  const Vec2 d1 = ne - sw;
  const Vec2 d2 = nw - se;
  const double denom = d1.cross(d2);
  if (std::abs(denom) <= 1e-12 * d1.norm() * d2.norm())
    throw InputError("geometry: crosswalk diagonals are parallel");
  const Vec2 w = se - sw;
  const double s = w.cross(d2) / denom;
  const double u = w.cross(d1) / denom;
  if (!(s > 0.0 && s < 1.0 && u > 0.0 && u < 1.0))
    throw InputError("geometry: crosswalk diagonals do not cross inside the intersection");
  center_ = sw + d1 * s;

  for (std::size_t k = 0; k < 4; ++k) {
    const Vec2 r = corners_[k] - center_;
    corner_angles_[k] = std::atan2(r.y, r.x);
  }
  // Corners must wind counterclockwise NE -> NW -> SW -> SE.
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double step = wrap_2pi(corner_angles_[(k + 1) % 4] - corner_angles_[k]);
    if (step <= 0.0 || step >= kPi) throw InputError("geometry: crosswalk endpoints are not in clockwise order");
    total += step;
  }
  if (std::abs(total - 2.0 * kPi) > 1e-9) throw InputError("geometry: corner rays do not partition the plane");
}

std::array<Vec2, 2> IntersectionGeometry::crosswalk(Direction approach) const {
  switch (approach) {
    case Direction::North: return {endpoints_[0], endpoints_[1]};
    case Direction::East: return {endpoints_[2], endpoints_[3]};
    case Direction::South: return {endpoints_[4], endpoints_[5]};
    case Direction::West: return {endpoints_[6], endpoints_[7]};
  }
  return {endpoints_[0], endpoints_[1]};
}

Direction IntersectionGeometry::quadrant_of(Vec2 p) const {
  const Vec2 r = p - center_;
  const double a = wrap_2pi(std::atan2(r.y, r.x) - corner_angles_[0]);
  // Wedges counterclockwise from the NE ray: N, W, S, E. Each wedge is
  // half-open [start ray, end ray).
  static constexpr std::array<Direction, 4> kWedges = {Direction::North, Direction::West, Direction::South,
                                                       Direction::East};
  for (std::size_t k = 1; k < 4; ++k) {
    const double bound = wrap_2pi(corner_angles_[k] - corner_angles_[0]);
    if (a < bound) return kWedges[k - 1];
  }
  return kWedges[3];
}

}  // namespace pvrisk
