#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "pvrisk/preprocess/preprocess.hpp"

namespace pvrisk::preprocess {

namespace {

constexpr double kEps = 1e-9;
constexpr double kMinHeadingSpeed = 0.1;  // m/s

// Heading at one end of a trajectory: velocity when moving, else the
// displacement across the three outermost valid points.
std::optional<double> end_heading(const std::vector<TrackPoint>& pts, bool at_end) {
  if (pts.empty()) return std::nullopt;
  const TrackPoint& p = at_end ? pts.back() : pts.front();
  if (p.speed() >= kMinHeadingSpeed) return std::atan2(p.vy, p.vx);
  const std::size_t span = std::min<std::size_t>(3, pts.size());
  if (span < 2) return std::nullopt;
  const Vec2 d = at_end ? pts.back().position() - pts[pts.size() - span].position()
                        : pts[span - 1].position() - pts.front().position();
  if (d.squared_norm() == 0.0) return std::nullopt;
  return std::atan2(d.y, d.x);
}

std::optional<double> chord_bearing(const std::vector<TrackPoint>& pts) {
  if (pts.size() < 2) return std::nullopt;
  const Vec2 d = pts.back().position() - pts.front().position();
  if (d.squared_norm() == 0.0) return std::nullopt;
  return std::atan2(d.y, d.x);
}

// Undefined bearings cannot contradict a match.
double bearing_gap_deg(std::optional<double> a, std::optional<double> b) {
  if (!a || !b) return 0.0;
  return rad_to_deg(angle_difference(*a, *b));
}

}  // namespace

std::optional<MergeGaps> merge_candidate(const Trajectory& a, const Trajectory& b, const MergeCriteria& c) {
  const auto pa = a.valid_points();
  const auto pb = b.valid_points();
  if (pa.empty() || pb.empty()) return std::nullopt;
  if (b.points.front().t <= a.points.back().t) return std::nullopt;

  MergeGaps g;
  g.time_gap = b.points.front().t - a.points.back().t;
  g.distance = distance(pa.back().position(), pb.front().position());
  g.heading_diff = bearing_gap_deg(end_heading(pa, true), end_heading(pb, false));
  g.chord_diff = bearing_gap_deg(chord_bearing(pa), chord_bearing(pb));

  if (g.time_gap > c.max_time_gap + kEps) return std::nullopt;
  if (g.distance > c.max_distance_gap + kEps) return std::nullopt;
  if (g.heading_diff > c.max_heading_diff + kEps) return std::nullopt;
  if (g.chord_diff > c.max_traj_angle_diff + kEps) return std::nullopt;
  return g;
}

std::vector<Trajectory> merge_pedestrian_trajectories(const std::vector<Trajectory>& trajs,
                                                      const MergeCriteria& criteria) {
  std::vector<std::size_t> order(trajs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return trajs[i].start_time() < trajs[j].start_time();
  });

  std::vector<bool> consumed(trajs.size(), false);
  std::vector<Trajectory> out;
  for (std::size_t head : order) {
    if (consumed[head]) continue;
    consumed[head] = true;
    Trajectory merged = trajs[head];
    while (true) {
      std::optional<std::size_t> best;
      MergeGaps best_gaps;
      for (std::size_t cand : order) {
        if (consumed[cand]) continue;
        const auto gaps = merge_candidate(merged, trajs[cand], criteria);
        if (!gaps) continue;
        const auto key = std::tie(gaps->time_gap, gaps->distance, gaps->heading_diff);
        if (!best || key < std::tie(best_gaps.time_gap, best_gaps.distance, best_gaps.heading_diff)) {
          best = cand;
          best_gaps = *gaps;
        }
      }
      if (!best) break;
      consumed[*best] = true;
      const auto& tail = trajs[*best].points;
      merged.points.insert(merged.points.end(), tail.begin(), tail.end());
    }
    out.push_back(std::move(merged));
  }
  return out;
}

}  // namespace pvrisk::preprocess
