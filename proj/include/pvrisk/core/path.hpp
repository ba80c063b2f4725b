#pragma once

#include <cstddef>
#include <vector>

#include "pvrisk/vec2.hpp"

namespace pvrisk {

/// Uniformly sampled predicted path. points[0] is the start (t = 0) and
/// points[j] is the position j*dt later, so a path of `steps()` steps holds
/// steps()+1 points.
struct PredictedPath {
  double dt = 0.1;
  std::vector<Vec2> points;

  std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
  double time_at(std::size_t j) const { return static_cast<double>(j) * dt; }
};

}  // namespace pvrisk
