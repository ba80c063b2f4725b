#include "pvrisk/preprocess/preprocess.hpp"

namespace pvrisk::preprocess {

std::string_view to_string(FilterRule r) {
  switch (r) {
    case FilterRule::TooShort: return "too_short";
    case FilterRule::MostlyInvalid: return "mostly_invalid";
    case FilterRule::TooFast: return "too_fast";
    case FilterRule::OffCrosswalk: return "off_crosswalk";
  }
  return "?";
}

WalkRegions default_walk_regions(const IntersectionGeometry& geom, double margin) {
  WalkRegions r;
  for (Direction d : kDirections) {
    const auto cw = geom.crosswalk(d);
    r.crosswalks.push_back(inflate_segment(cw[0], cw[1], margin));
  }
  r.roadway = convex_hull(std::vector<Vec2>(geom.endpoints().begin(), geom.endpoints().end()));
  return r;
}

std::vector<FilterRule> violated_rules(const Trajectory& traj, const WalkRegions& regions,
                                       const PedestrianFilterConfig& cfg) {
  std::vector<FilterRule> rules;
  const auto valid = traj.valid_points();

  double path = 0.0;
  for (std::size_t i = 1; i < valid.size(); ++i) path += distance(valid[i - 1].position(), valid[i].position());
  if (traj.duration() <= cfg.min_duration || path <= cfg.min_path_length) rules.push_back(FilterRule::TooShort);

  const double invalid_share =
      1.0 - static_cast<double>(valid.size()) / static_cast<double>(std::max<std::size_t>(1, traj.points.size()));
  if (invalid_share >= cfg.max_invalid_fraction) rules.push_back(FilterRule::MostlyInvalid);

  std::size_t run = 0;
  bool fast = false;
  for (const auto& p : traj.points) {
    run = (p.valid && p.speed() >= cfg.fast_speed) ? run + 1 : 0;
    if (run >= cfg.fast_run) fast = true;
  }
  if (fast) rules.push_back(FilterRule::TooFast);

  bool touches = false;
  bool strays = false;
  for (const auto& p : valid) {
    bool on_crosswalk = false;
    for (const auto& poly : regions.crosswalks)
      if (contains(poly, p.position())) on_crosswalk = true;
    const bool on_road = contains(regions.roadway, p.position());
    if (on_crosswalk || on_road) touches = true;
    if (on_road && !on_crosswalk) strays = true;
  }
  if (!touches || strays) rules.push_back(FilterRule::OffCrosswalk);
  return rules;
}

FilterOutcome filter_pedestrian_trajectories(const std::vector<Trajectory>& trajs, const WalkRegions& regions,
                                             const PedestrianFilterConfig& cfg) {
  FilterOutcome out;
  for (const auto& t : trajs) {
    auto rules = violated_rules(t, regions, cfg);
    if (rules.empty())
      out.kept.push_back(t);
    else
      out.removed.emplace_back(t.id, std::move(rules));
  }
  return out;
}

}  // namespace pvrisk::preprocess
