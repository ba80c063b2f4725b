#include <algorithm>
#include <cmath>

#include "pvrisk/errors.hpp"
#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::maneuver {

FeatureRow extract_features(const TrackPoint& p, Direction entering, const FeatureLayout& layout) {
  if (!p.valid || !kinematics_finite(p)) throw InputError("extract_features: invalid track point");
  FeatureRow row{p.x, p.y};
  if (layout.velocity == VelocityFeatures::Magnitude) {
    row.push_back(std::hypot(p.vx, p.vy));
  } else {
    row.push_back(p.vx);
    row.push_back(p.vy);
  }
  row.push_back(p.yaw_rate);
  row.push_back(static_cast<double>(index_of(entering)));
  return row;
}

std::array<std::size_t, 3> LabeledFeatures::class_counts() const {
  std::array<std::size_t, 3> c{};
  for (Maneuver m : labels) ++c[static_cast<std::size_t>(index_of(m))];
  return c;
}

LabeledFeatures LabeledFeatures::subset(std::span<const std::size_t> indices) const {
  LabeledFeatures out;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(rows[i]);
    out.labels.push_back(labels[i]);
    if (!groups.empty()) out.groups.push_back(groups[i]);
  }
  return out;
}

LabeledFeatures build_feature_table(const std::vector<const Trajectory*>& vehicles, const FeatureLayout& layout,
                                    std::size_t frame_stride) {
  frame_stride = std::max<std::size_t>(frame_stride, 1);
  LabeledFeatures table;
  for (std::size_t g = 0; g < vehicles.size(); ++g) {
    const Trajectory& t = *vehicles[g];
    if (!t.entering_direction || !t.maneuver) continue;
    std::size_t seen = 0;
    for (const TrackPoint& p : t.points) {
      if (!p.valid || !kinematics_finite(p)) continue;
      if (seen++ % frame_stride != 0) continue;
      table.rows.push_back(extract_features(p, *t.entering_direction, layout));
      table.labels.push_back(*t.maneuver);
      table.groups.push_back(g);
    }
  }
  return table;
}

double ManeuverDistribution::operator[](Maneuver m) const {
  switch (m) {
    case Maneuver::LeftTurn: return p_left;
    case Maneuver::RightTurn: return p_right;
    case Maneuver::Straight: return p_straight;
  }
  return 0.0;
}

Maneuver ManeuverDistribution::argmax() const {
  Maneuver best = Maneuver::LeftTurn;
  for (Maneuver m : kManeuvers)
    if ((*this)[m] > (*this)[best]) best = m;
  return best;
}

}  // namespace pvrisk::maneuver
