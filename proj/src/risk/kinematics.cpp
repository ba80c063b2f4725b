#include <cmath>
#include <numeric>

#include "pvrisk/errors.hpp"
#include "pvrisk/risk/risk.hpp"

namespace pvrisk::risk {

bool KinematicState::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(vx) && std::isfinite(vy) && std::isfinite(ax) &&
         std::isfinite(ay);
}

KinematicState state_at(const Trajectory& traj, std::size_t index) {
  if (index >= traj.points.size()) throw InputError("state_at: index out of range");
  const TrackPoint& p = traj.points[index];
  if (!p.valid || !kinematics_finite(p)) throw InputError("state_at: invalid point");
  KinematicState s{p.x, p.y, p.vx, p.vy, 0.0, 0.0};
  for (std::size_t i = index; i-- > 0;) {
    const TrackPoint& q = traj.points[i];
    if (!q.valid || !kinematics_finite(q)) continue;
    const double dt = p.t - q.t;
    if (dt > 0.0) {
      s.ax = (p.vx - q.vx) / dt;
      s.ay = (p.vy - q.vy) / dt;
    }
    break;
  }
  return s;
}

PredictedPath predict_pedestrian(const KinematicState& s, double dt, int steps) {
  PredictedPath path;
  path.dt = dt;
  for (int j = 0; j <= steps; ++j) {
    const double t = j * dt;
    path.points.push_back({s.x + s.vx * t, s.y + s.vy * t});
  }
  return path;
}

PredictedPath dynamic_model_predict(const KinematicState& s, double dt, int steps) {
  PredictedPath path;
  path.dt = dt;
  for (int j = 0; j <= steps; ++j) {
    const double t = j * dt;
    path.points.push_back({s.x + s.vx * t + 0.5 * s.ax * t * t, s.y + s.vy * t + 0.5 * s.ay * t * t});
  }
  return path;
}

PredictionError trajectory_error(std::span<const Vec2> predicted, std::span<const Vec2> actual) {
  if (predicted.size() != actual.size()) throw InputError("trajectory_error: length mismatch");
  PredictionError e;
  e.distances.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) e.distances.push_back(distance(predicted[i], actual[i]));
  if (e.distances.empty()) return e;
  const double n = static_cast<double>(e.distances.size());
  e.mean = std::accumulate(e.distances.begin(), e.distances.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : e.distances) ss += (d - e.mean) * (d - e.mean);
  e.std = std::sqrt(ss / n);
  return e;
}

}  // namespace pvrisk::risk
