#include <cmath>

#include "pvrisk/ssm/ssm.hpp"

namespace pvrisk::ssm {

std::optional<double> compute_ttc(const risk::KinematicState& vehicle, const risk::KinematicState& pedestrian,
                                  double radius) {
  const Vec2 p = pedestrian.position() - vehicle.position();
  const Vec2 w = pedestrian.velocity() - vehicle.velocity();
  if (p.squared_norm() <= radius * radius) return 0.0;
  const double a = w.squared_norm();
  const double b = p.dot(w);
  if (a == 0.0 || b >= 0.0) return std::nullopt;
  // Cross-product form keeps the discriminant accurate for small radii.
  const double c = p.cross(w);
  const double disc = radius * radius * a - c * c;
  if (disc < 0.0) return std::nullopt;
  return (-b - std::sqrt(disc)) / a;
}

}  // namespace pvrisk::ssm
