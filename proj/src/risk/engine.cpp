#include <algorithm>

#include "pvrisk/errors.hpp"
#include "pvrisk/risk/risk.hpp"

namespace pvrisk::risk {

VehicleOutlook vehicle_outlook(const TrackPoint& vehicle, Direction entering, const gpr::ClusterModels& models,
                               const maneuver::ForestModel& forest, const RiskConfig& cfg) {
  if (forest.trees.empty()) throw InputError("risk: maneuver forest is not trained");
  VehicleOutlook o;
  o.t = vehicle.t;
  bool any = false;
  for (Maneuver m : kManeuvers) {
    const gpr::GprModelPair* pair = models.get(entering, m);
    if (!pair) continue;
    any = true;
    o.paths[static_cast<std::size_t>(index_of(m))] = gpr::rollout(*pair, vehicle.position(), cfg.rollout);
  }
  if (!any) throw InputError("risk: no cluster model for entering direction " + std::string(to_string(entering)));
  o.probs = forest.predict_proba(maneuver::extract_features(vehicle, entering, cfg.layout));
  return o;
}

RiskProfile assess(const VehicleOutlook& outlook, const KinematicState& pedestrian, const RiskConfig& cfg) {
  RiskProfile profile;
  profile.t = outlook.t;
  profile.maneuver_probs = outlook.probs;
  const PredictedPath ped = predict_pedestrian(pedestrian, cfg.rollout.dt, cfg.rollout.steps);
  std::array<double, 3> risks{};
  for (Maneuver m : kManeuvers) {
    const auto i = static_cast<std::size_t>(index_of(m));
    ConflictAssessment& a = profile.assessments[i];
    a.maneuver = m;
    if (!outlook.paths[i]) {
      a.model_missing = true;
      continue;
    }
    if (const auto c = find_conflict_point(*outlook.paths[i], ped, cfg.radius)) {
      a.conflict_point = c->point;
      a.t_vehicle = c->t_vehicle;
      a.t_pedestrian = c->t_pedestrian;
      a.risk = maneuver_risk(c);
    }
    risks[i] = a.risk;
  }
  profile.risk = std::clamp(mix_risk(risks, outlook.probs), 0.0, 1.0);
  return profile;
}

RiskProfile estimate_risk(const TrackPoint& vehicle, Direction entering, const KinematicState& pedestrian,
                          const gpr::ClusterModels& models, const maneuver::ForestModel* forest,
                          const RiskConfig& cfg) {
  if (!forest) throw InputError("risk: maneuver forest is missing");
  return assess(vehicle_outlook(vehicle, entering, models, *forest, cfg), pedestrian, cfg);
}

}  // namespace pvrisk::risk
