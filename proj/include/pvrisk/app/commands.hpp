#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pvrisk/app/config.hpp"
#include "pvrisk/maneuver/maneuver.hpp"
#include "pvrisk/preprocess/preprocess.hpp"
#include "pvrisk/risk/study.hpp"
#include "pvrisk/ssm/ssm.hpp"
#include "pvrisk/synth/scenario.hpp"

namespace pvrisk::app {

namespace fs = std::filesystem;

// Output file names.
inline constexpr const char* kDatasetFile = "dataset.csv";
inline constexpr const char* kGroundTruthFile = "ground_truth.json";
inline constexpr const char* kLabeledFile = "labeled.csv";
inline constexpr const char* kGeometryFile = "geometry.json";
inline constexpr const char* kPreprocessReportFile = "preprocess_report.json";
inline constexpr const char* kDensityGridFile = "density_grid.csv";
inline constexpr const char* kGprModelsFile = "gpr_models.json";
inline constexpr const char* kForestFile = "forest.json";
inline constexpr const char* kTrajectoryReportFile = "trajectory_report.json";
inline constexpr const char* kTrajectoryTableFile = "trajectory_table.csv";
inline constexpr const char* kClassifierReportFile = "classifier_report.json";
inline constexpr const char* kRiskSeriesFile = "risk_series.csv";
inline constexpr const char* kDetectionReportFile = "detection_report.json";
inline constexpr const char* kConflictsFile = "conflicts.csv";
inline constexpr const char* kCaseStudiesFile = "case_studies.csv";

/// Writes dataset.csv and ground_truth.json. The scenario seed is cfg.seed.
synth::Scenario cmd_synth(const RunConfig& cfg, const fs::path& out_dir);

/// Writes labeled.csv, geometry.json, preprocess_report.json and, when the
/// endpoints were estimated, density_grid.csv.
preprocess::PreprocessResult cmd_preprocess(const RunConfig& cfg, const fs::path& in_csv, const fs::path& out_dir);

struct TrainResult {
  std::vector<std::string> train_ids;
  std::vector<std::string> holdout_ids;
  risk::TrajectoryStudy study;
  maneuver::ProtocolResult protocol;
};

/// Cluster GPR models from the non-holdout vehicles, the prediction study on
/// the holdout, and the repeated-split forest protocol on every labeled
/// vehicle. Writes gpr_models.json, forest.json, trajectory_report.json,
/// trajectory_table.csv and classifier_report.json.
TrainResult cmd_train(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& out_dir);

struct RiskResult {
  std::vector<ssm::ConflictEvent> truth;
  std::vector<ssm::PairStream> streams;
  ssm::DetectionReport detection;
  std::size_t vehicles_skipped = 0;
};

/// Per-pair risk and TTC streams over the common frames of every co-present
/// vehicle-pedestrian pair, PET ground truth and the detection report.
/// Writes risk_series.csv, detection_report.json, conflicts.csv and
/// case_studies.csv.
RiskResult cmd_risk(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& models_dir,
                     const fs::path& out_dir);

// Report encoders.
nlohmann::json to_json(const preprocess::PreprocessReport& report);
nlohmann::json to_json(const risk::TrajectoryStudy& study);
nlohmann::json to_json(const maneuver::ClassificationReport& report);
nlohmann::json to_json(const maneuver::ProtocolResult& result);
nlohmann::json to_json(const ssm::DetectionReport& report);

}  // namespace pvrisk::app
