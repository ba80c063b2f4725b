#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "pvrisk/core/dataset.hpp"
#include "pvrisk/gpr/gpr.hpp"
#include "pvrisk/maneuver/maneuver.hpp"
#include "pvrisk/preprocess/preprocess.hpp"
#include "pvrisk/risk/study.hpp"
#include "pvrisk/synth/scenario.hpp"

namespace pvrisk::app {

struct GprSection {
  gpr::KernelKind kernel = gpr::KernelKind::RQ;
  std::size_t max_points = 2000;
  gpr::OptimizerSettings optimizer;
};

struct ForestSection {
  maneuver::ForestGrid grid;
  int splits = 10;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  std::size_t smote_k = 5;
  maneuver::FeatureLayout layout;
  std::size_t frame_stride = 1;
};

struct RiskSection {
  double dt = 0.1;
  int steps = 30;
  double radius = 1.0;
  gpr::RolloutMode mode = gpr::RolloutMode::PosteriorMean;
  std::size_t frame_stride = 1;
};

struct SsmSection {
  double pet_threshold = 3.0;
  double zone_radius = 1.0;
  double ttc_radius = 1.0;
};

struct EvaluationSection {
  double holdout_fraction = 0.2;
  risk::StudyConfig study;
};

/// Every stage's settings. All randomness derives from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  CsvSchema schema;
  synth::ScenarioSpec synth;
  preprocess::PreprocessConfig preprocess;
  GprSection gpr;
  ForestSection forest;
  RiskSection risk;
  SsmSection ssm;
  EvaluationSection evaluation;
};

/// Defaults plus a synthetic scene and search boxes around the canonical
/// crosswalk endpoints.
RunConfig default_config();

/// Sections: seed, schema, synth, preprocess, gpr, forest, risk, ssm,
/// evaluation. Missing keys keep their defaults; unknown keys and wrongly
/// typed values raise InputError naming the key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace pvrisk::app
