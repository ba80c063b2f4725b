#include "pvrisk/errors.hpp"
#include "pvrisk/preprocess/preprocess.hpp"

namespace pvrisk::preprocess {

Direction classify_entering_direction(const Trajectory& traj, const IntersectionGeometry& geom) {
  for (const auto& p : traj.points)
    if (p.valid) return geom.quadrant_of(p.position());
  throw InputError("classify_entering_direction: trajectory '" + traj.id + "' has no valid points");
}

std::vector<Direction> quadrant_sequence(const Trajectory& traj, const IntersectionGeometry& geom) {
  std::vector<Direction> seq;
  for (const auto& p : traj.points) {
    if (!p.valid) continue;
    const Direction q = geom.quadrant_of(p.position());
    if (seq.empty() || seq.back() != q) seq.push_back(q);
  }
  return seq;
}

std::optional<Maneuver> movement_from_sequence(const std::vector<Direction>& seq) {
  if (seq.size() < 2) return std::nullopt;
  const Direction entry = seq.front();
  const Direction exit = seq.back();
  // Compass indices run clockwise: N=0, E=1, S=2, W=3.
  const int turn = (index_of(exit) - index_of(entry) + 4) % 4;
  switch (turn) {
    case 2: return Maneuver::Straight;
    case 1: return Maneuver::LeftTurn;   // S -> W, E -> S, ...
    case 3: return Maneuver::RightTurn;  // S -> E, W -> S, ...
    default: return std::nullopt;        // back in the entry quadrant
  }
}

std::optional<Maneuver> classify_movement(const Trajectory& traj, const IntersectionGeometry& geom) {
  return movement_from_sequence(quadrant_sequence(traj, geom));
}

}  // namespace pvrisk::preprocess
