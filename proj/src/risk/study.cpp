#include "pvrisk/risk/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pvrisk/risk/risk.hpp"

namespace pvrisk::risk {

std::string_view to_string(StudyGroup g) {
  switch (g) {
    case StudyGroup::LeftTurn: return "left";
    case StudyGroup::RightTurn: return "right";
    case StudyGroup::Straight: return "straight";
    case StudyGroup::Turns: return "turns";
    case StudyGroup::All: return "all";
  }
  return "?";
}

namespace {

bool in_group(StudyGroup g, Maneuver m) {
  switch (g) {
    case StudyGroup::LeftTurn: return m == Maneuver::LeftTurn;
    case StudyGroup::RightTurn: return m == Maneuver::RightTurn;
    case StudyGroup::Straight: return m == Maneuver::Straight;
    case StudyGroup::Turns: return m != Maneuver::Straight;
    case StudyGroup::All: return true;
  }
  return false;
}

ErrorSummary summarize(const std::vector<double>& v) {
  ErrorSummary s;
  s.vehicles = v.size();
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

// Observed points start..start+steps, or empty if any is missing.
std::vector<Vec2> observed(const Trajectory& t, std::size_t start, int steps, double dt) {
  const std::size_t last = start + static_cast<std::size_t>(steps);
  if (last >= t.points.size()) return {};
  std::vector<Vec2> out;
  for (std::size_t i = start; i <= last; ++i) {
    const TrackPoint& p = t.points[i];
    if (!p.valid || !kinematics_finite(p)) return {};
    if (std::abs((p.t - t.points[start].t) - static_cast<double>(i - start) * dt) > 0.5 * dt) return {};
    out.push_back(p.position());
  }
  return out;
}

struct Scores {
  std::vector<std::pair<Maneuver, double>> gpr, dynamic;
};

void score(const Trajectory& t, const gpr::GprModelPair& pair, std::size_t start, int steps, int eval_steps,
           const StudyConfig& cfg, Scores& out) {
  const std::vector<Vec2> actual = observed(t, start, steps, cfg.dt);
  if (actual.empty()) return;
  gpr::RolloutConfig rc;
  rc.dt = cfg.dt;
  rc.steps = eval_steps;
  rc.mode = cfg.mode;
  const PredictedPath g = gpr::rollout(pair, actual.front(), rc);
  const PredictedPath d = dynamic_model_predict(state_at(t, start), cfg.dt, eval_steps);
  const auto span = [&](const PredictedPath& p) { return std::span<const Vec2>(p.points).subspan(1); };
  const std::span<const Vec2> truth = std::span<const Vec2>(actual).subspan(1, static_cast<std::size_t>(eval_steps));
  out.gpr.emplace_back(*t.maneuver, trajectory_error(span(g), truth).mean);
  out.dynamic.emplace_back(*t.maneuver, trajectory_error(span(d), truth).mean);
}

StudyRow to_row(int parameter, const Scores& s) {
  StudyRow row;
  row.parameter = parameter;
  for (std::size_t g = 0; g < kStudyGroups.size(); ++g) {
    std::vector<double> gv, dv;
    for (const auto& [m, e] : s.gpr)
      if (in_group(kStudyGroups[g], m)) gv.push_back(e);
    for (const auto& [m, e] : s.dynamic)
      if (in_group(kStudyGroups[g], m)) dv.push_back(e);
    row.gpr[g] = summarize(gv);
    row.dynamic[g] = summarize(dv);
  }
  return row;
}

}  // namespace

TrajectoryStudy run_trajectory_study(const std::vector<const Trajectory*>& vehicles, const gpr::ClusterModels& models,
                                     const StudyConfig& cfg) {
  TrajectoryStudy study;
  const auto usable = [&](const Trajectory* t) -> const gpr::GprModelPair* {
    if (!t->entering_direction || !t->maneuver) return nullptr;
    return models.get(*t->entering_direction, *t->maneuver);
  };

  for (int sp : cfg.starting_points) {
    Scores s;
    for (const Trajectory* t : vehicles)
      if (const auto* pair = usable(t); pair && sp >= 1)
        score(*t, *pair, static_cast<std::size_t>(sp - 1), cfg.horizon_steps, cfg.horizon_steps, cfg, s);
    study.by_starting_point.push_back(to_row(sp, s));
  }

  if (!cfg.starting_points.empty() && !cfg.horizons.empty()) {
    const int sp = cfg.starting_points.front();
    const int longest = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    for (int h : cfg.horizons) {
      Scores s;
      for (const Trajectory* t : vehicles)
        if (const auto* pair = usable(t); pair && sp >= 1 && h >= 1)
          score(*t, *pair, static_cast<std::size_t>(sp - 1), longest, h, cfg, s);
      study.by_horizon.push_back(to_row(h, s));
    }
  }
  return study;
}

}  // namespace pvrisk::risk
