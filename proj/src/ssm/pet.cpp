#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "pvrisk/simd/kernels.hpp"
#include "pvrisk/ssm/ssm.hpp"

namespace pvrisk::ssm {

namespace {

struct Polyline {
  std::vector<Vec2> points;
  std::vector<double> times;
};

Polyline valid_polyline(const Trajectory& t) {
  Polyline p;
  for (const TrackPoint& q : t.points) {
    if (!q.valid || !std::isfinite(q.x) || !std::isfinite(q.y)) continue;
    p.points.push_back(q.position());
    p.times.push_back(q.t);
  }
  return p;
}

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = d.squared_norm();
  if (len2 == 0.0) return a;
  const double s = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return a + d * s;
}

ClosestApproach segment_pair(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const Vec2 da = a1 - a0;
  const Vec2 db = b1 - b0;
  const double denom = da.cross(db);
  if (denom != 0.0) {
    const double s = (b0 - a0).cross(db) / denom;
    const double u = (b0 - a0).cross(da) / denom;
    if (s >= 0.0 && s <= 1.0 && u >= 0.0 && u <= 1.0) {
      const Vec2 x = a0 + da * s;
      return {x, x, 0.0};
    }
  }
  ClosestApproach best{a0, closest_on_segment(a0, b0, b1), 0.0};
  best.distance = distance(best.on_a, best.on_b);
  const auto consider = [&](Vec2 on_a, Vec2 on_b) {
    const double d = distance(on_a, on_b);
    if (d < best.distance) best = {on_a, on_b, d};
  };
  consider(a1, closest_on_segment(a1, b0, b1));
  consider(closest_on_segment(b0, a0, a1), b0);
  consider(closest_on_segment(b1, a0, a1), b1);
  return best;
}

std::optional<ClosestApproach> closest_between(const Polyline& a, const Polyline& b) {
  if (a.points.empty() || b.points.empty()) return std::nullopt;
  const std::size_t m = b.points.size();
  std::vector<double> xs(m), ys(m), d2(m);
  for (std::size_t k = 0; k < m; ++k) {
    xs[k] = b.points[k].x;
    ys[k] = b.points[k].y;
  }
  std::size_t bi = 0, bk = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    std::fill(d2.begin(), d2.end(), 0.0);
    simd::add_squared_diff(xs, a.points[i].x, d2);
    simd::add_squared_diff(ys, a.points[i].y, d2);
    const std::size_t k = simd::argmin(d2);
    if (d2[k] < best) {
      best = d2[k];
      bi = i;
      bk = k;
    }
  }

  // Refine against the segments adjacent to the closest sample pair.
  ClosestApproach result{a.points[bi], b.points[bk], std::sqrt(best)};
  const auto segments = [](std::size_t i, std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> s;
    if (i > 0) s.emplace_back(i - 1, i);
    if (i + 1 < n) s.emplace_back(i, i + 1);
    if (s.empty()) s.emplace_back(i, i);
    return s;
  };
  for (const auto& [a0, a1] : segments(bi, a.points.size()))
    for (const auto& [b0, b1] : segments(bk, m)) {
      const ClosestApproach c = segment_pair(a.points[a0], a.points[a1], b.points[b0], b.points[b1]);
      if (c.distance < result.distance) result = c;
    }
  return result;
}

std::optional<ZoneOccupancy> occupancy(const Polyline& p, Vec2 center, double radius) {
  std::optional<ZoneOccupancy> occ;
  const auto mark = [&](double t0, double t1) {
    if (!occ) occ = ZoneOccupancy{t0, t1};
    occ->enter = std::min(occ->enter, t0);
    occ->exit = std::max(occ->exit, t1);
  };
  const double r2 = radius * radius;
  if (p.points.size() == 1) {
    if ((p.points[0] - center).squared_norm() <= r2) mark(p.times[0], p.times[0]);
    return occ;
  }
  for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
    const Vec2 d = p.points[i + 1] - p.points[i];
    const Vec2 f = p.points[i] - center;
    const double t0 = p.times[i];
    const double t1 = p.times[i + 1];
    const double a = d.squared_norm();
    const double c = f.squared_norm() - r2;
    if (a == 0.0) {
      if (c <= 0.0) mark(t0, t1);
      continue;
    }
    const double b = 2.0 * f.dot(d);
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    const double s1 = std::max(0.0, (-b - root) / (2.0 * a));
    const double s2 = std::min(1.0, (-b + root) / (2.0 * a));
    if (s1 > s2) continue;
    mark(t0 + s1 * (t1 - t0), t0 + s2 * (t1 - t0));
  }
  return occ;
}

struct Bounds {
  Vec2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
};

Bounds bounds_of(const Polyline& p) {
  Bounds b;
  for (Vec2 q : p.points) {
    b.min = {std::min(b.min.x, q.x), std::min(b.min.y, q.y)};
    b.max = {std::max(b.max.x, q.x), std::max(b.max.y, q.y)};
  }
  return b;
}

std::optional<ConflictEvent> pet_between(const Trajectory& vehicle, const Polyline& v, const Trajectory& pedestrian,
                                         const Polyline& p, double zone_radius) {
  const auto ca = closest_between(v, p);
  if (!ca || ca->distance > zone_radius) return std::nullopt;
  const Vec2 center = (ca->on_a + ca->on_b) * 0.5;
  const auto ov = occupancy(v, center, zone_radius);
  const auto op = occupancy(p, center, zone_radius);
  if (!ov || !op) return std::nullopt;

  ConflictEvent e;
  e.vehicle_id = vehicle.id;
  e.pedestrian_id = pedestrian.id;
  e.zone_center = center;
  e.vehicle_first = ov->enter <= op->enter;
  const ZoneOccupancy& first = e.vehicle_first ? *ov : *op;
  const ZoneOccupancy& second = e.vehicle_first ? *op : *ov;
  e.window_start = std::min(first.exit, second.enter);
  e.window_end = std::max(first.exit, second.enter);
  e.pet = std::max(0.0, second.enter - first.exit);
  return e;
}

}  // namespace

std::optional<ZoneOccupancy> zone_occupancy(const Trajectory& traj, Vec2 center, double radius) {
  return occupancy(valid_polyline(traj), center, radius);
}

std::optional<ClosestApproach> closest_approach(const Trajectory& a, const Trajectory& b) {
  return closest_between(valid_polyline(a), valid_polyline(b));
}

std::optional<ConflictEvent> compute_pet(const Trajectory& vehicle, const Trajectory& pedestrian,
                                         double zone_radius) {
  return pet_between(vehicle, valid_polyline(vehicle), pedestrian, valid_polyline(pedestrian), zone_radius);
}

bool co_present(const Trajectory& a, const Trajectory& b) {
  if (a.points.empty() || b.points.empty()) return false;
  return a.start_time() <= b.end_time() && b.start_time() <= a.end_time();
}

std::vector<ConflictEvent> identify_conflicts_pet(const Dataset& dataset, double threshold, double zone_radius) {
  const auto vehicles = dataset.of_class(ObjectClass::Vehicle);
  const auto pedestrians = dataset.of_class(ObjectClass::Pedestrian);
  std::vector<Polyline> ped_lines;
  std::vector<Bounds> ped_bounds;
  for (const Trajectory* p : pedestrians) {
    ped_lines.push_back(valid_polyline(*p));
    ped_bounds.push_back(bounds_of(ped_lines.back()));
  }

  std::vector<ConflictEvent> events;
  for (const Trajectory* v : vehicles) {
    const Polyline vl = valid_polyline(*v);
    const Bounds vb = bounds_of(vl);
    for (std::size_t k = 0; k < pedestrians.size(); ++k) {
      if (!co_present(*v, *pedestrians[k])) continue;
      const Bounds& pb = ped_bounds[k];
      if (vb.min.x - zone_radius > pb.max.x || pb.min.x - zone_radius > vb.max.x ||
          vb.min.y - zone_radius > pb.max.y || pb.min.y - zone_radius > vb.max.y)
        continue;
      auto e = pet_between(*v, vl, *pedestrians[k], ped_lines[k], zone_radius);
      if (e && e->pet <= threshold) events.push_back(std::move(*e));
    }
  }
  std::sort(events.begin(), events.end(), [](const ConflictEvent& a, const ConflictEvent& b) {
    return std::tie(a.vehicle_id, a.pedestrian_id) < std::tie(b.vehicle_id, b.pedestrian_id);
  });
  return events;
}

}  // namespace pvrisk::ssm
