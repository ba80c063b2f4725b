#include <cmath>
#include <cstdlib>

#include "pvrisk/errors.hpp"
#include "pvrisk/risk/risk.hpp"
#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::risk {

std::optional<ConflictPoint> find_conflict_point(const PredictedPath& vehicle, const PredictedPath& pedestrian,
                                                 double radius) {
  if (vehicle.points.size() != pedestrian.points.size() || vehicle.dt != pedestrian.dt)
    throw InputError("find_conflict_point: paths differ in step count or dt");
  const std::size_t n = pedestrian.points.size();
  std::vector<double> xs(n), ys(n), d2(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = pedestrian.points[k].x;
    ys[k] = pedestrian.points[k].y;
  }
  const double r2 = radius * radius;

  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t best_gap = n;
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(d2.begin(), d2.end(), 0.0);
    simd::add_squared_diff(xs, vehicle.points[j].x, d2);
    simd::add_squared_diff(ys, vehicle.points[j].y, d2);
    for (std::size_t k = 0; k < n; ++k) {
      if (!(d2[k] <= r2)) continue;
      const std::size_t gap = j > k ? j - k : k - j;
      if (gap < best_gap) {
        best_gap = gap;
        best = {j, k};
      }
    }
  }
  if (!best) return std::nullopt;
  const auto [j, k] = *best;
  ConflictPoint c;
  c.point = (vehicle.points[j] + pedestrian.points[k]) * 0.5;
  c.vehicle_index = j;
  c.pedestrian_index = k;
  c.t_vehicle = vehicle.time_at(j);
  c.t_pedestrian = pedestrian.time_at(k);
  return c;
}

double maneuver_risk(double t_vehicle, double t_pedestrian) { return std::exp(-std::abs(t_vehicle - t_pedestrian)); }

double maneuver_risk(const std::optional<ConflictPoint>& conflict) {
  return conflict ? maneuver_risk(conflict->t_vehicle, conflict->t_pedestrian) : 0.0;
}

double mix_risk(const std::array<double, 3>& risks, const maneuver::ManeuverDistribution& probs) {
  return risks[0] * probs.p_left + risks[1] * probs.p_right + risks[2] * probs.p_straight;
}

}  // namespace pvrisk::risk
