#pragma once

#include <array>
#include <vector>

#include "pvrisk/gpr/gpr.hpp"

namespace pvrisk::risk {

/// Groups reported by the prediction study.
enum class StudyGroup { LeftTurn, RightTurn, Straight, Turns, All };
inline constexpr std::array<StudyGroup, 5> kStudyGroups = {StudyGroup::LeftTurn, StudyGroup::RightTurn,
                                                           StudyGroup::Straight, StudyGroup::Turns, StudyGroup::All};
std::string_view to_string(StudyGroup g);

struct StudyConfig {
  double dt = 0.1;
  int horizon_steps = 30;
  std::vector<int> starting_points{10, 15, 20};  // 1-based point index
  std::vector<int> horizons{10, 15, 20};         // evaluated from the first starting point
  gpr::RolloutMode mode = gpr::RolloutMode::PosteriorMean;
};

/// Mean and population standard deviation of the per-vehicle mean distance.
struct ErrorSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t vehicles = 0;
};

struct StudyRow {
  int parameter = 0;  // starting point or horizon
  std::array<ErrorSummary, 5> gpr{};
  std::array<ErrorSummary, 5> dynamic{};
};

struct TrajectoryStudy {
  std::vector<StudyRow> by_starting_point;
  std::vector<StudyRow> by_horizon;
};

/// Compares GPR rollouts of each vehicle's own cluster with the constant
/// acceleration model against the observed future points. A vehicle takes
/// part in a row only if every needed point is valid and on the frame grid.
TrajectoryStudy run_trajectory_study(const std::vector<const Trajectory*>& vehicles, const gpr::ClusterModels& models,
                                     const StudyConfig& cfg);

}  // namespace pvrisk::risk
