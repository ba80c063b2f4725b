#include <cmath>
#include <random>

#include "pvrisk/errors.hpp"
#include "pvrisk/gpr/gpr.hpp"

namespace pvrisk::gpr {

PredictedPath rollout(const GprModelPair& pair, Vec2 start, const RolloutConfig& cfg) {
  if (!(cfg.dt > 0.0) || cfg.steps < 1) throw InputError("rollout: dt must be positive and steps at least 1");
  if (!std::isfinite(start.x) || !std::isfinite(start.y)) throw InputError("rollout: non-finite start");

  PredictedPath path;
  path.dt = cfg.dt;
  path.points.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  path.points.push_back(start);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec2 p = start;
  for (int j = 0; j < cfg.steps; ++j) {
    Vec2 v;
    if (cfg.mode == RolloutMode::PosteriorMean) {
      v = {pair.gp_x.predict_mean(p), pair.gp_y.predict_mean(p)};
    } else {
      const Prediction px = pair.gp_x.predict(p);
      const Prediction py = pair.gp_y.predict(p);
      v = {px.mean + std::sqrt(px.variance) * normal(rng), py.mean + std::sqrt(py.variance) * normal(rng)};
    }
    p = p + v * cfg.dt;
    path.points.push_back(p);
  }
  return path;
}

}  // namespace pvrisk::gpr
