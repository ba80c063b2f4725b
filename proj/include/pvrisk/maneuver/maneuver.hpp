#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pvrisk/core/types.hpp"

namespace pvrisk::maneuver {

enum class VelocityFeatures { Magnitude, Components };

/// Column order: x, y, speed (or vx, vy), yaw_rate, direction code.
struct FeatureLayout {
  VelocityFeatures velocity = VelocityFeatures::Magnitude;

  std::size_t size() const { return velocity == VelocityFeatures::Magnitude ? 5 : 6; }
  std::size_t direction_column() const { return size() - 1; }
};

using FeatureRow = std::vector<double>;

/// Throws InputError for an invalid point.
FeatureRow extract_features(const TrackPoint& p, Direction entering, const FeatureLayout& layout = {});

struct LabeledFeatures {
  std::vector<FeatureRow> rows;
  std::vector<Maneuver> labels;
  std::vector<std::size_t> groups;  // source trajectory per row; may be empty

  std::size_t size() const { return rows.size(); }
  std::array<std::size_t, 3> class_counts() const;
  LabeledFeatures subset(std::span<const std::size_t> indices) const;
};

/// Every `frame_stride`-th valid point of every labeled vehicle, labeled with
/// its trajectory's maneuver.
LabeledFeatures build_feature_table(const std::vector<const Trajectory*>& vehicles, const FeatureLayout& layout = {},
                                    std::size_t frame_stride = 1);

struct ManeuverDistribution {
  double p_left = 0.0;
  double p_right = 0.0;
  double p_straight = 0.0;

  double operator[](Maneuver m) const;
  Maneuver argmax() const;
};

/// Synthetic rows are appended per class after the original rows. Neighbours
/// are searched over every column except `categorical_column`, which is
/// copied from the base sample.
LabeledFeatures smote_oversample(const LabeledFeatures& data, std::size_t k, std::uint64_t seed,
                                 std::size_t categorical_column);

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, 3> distribution{};  // class frequencies, leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const std::array<double, 3>& leaf(std::span<const double> row) const;
};

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0: floor(sqrt(n_features))
};

struct ForestModel {
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;

  ManeuverDistribution predict_proba(std::span<const double> row) const;
  Maneuver predict(std::span<const double> row) const { return predict_proba(row).argmax(); }
};

/// Bootstrap plus random feature subsets per split; Gini impurity.
ForestModel train_forest(const LabeledFeatures& train, const ForestParams& params, std::uint64_t seed);

struct ForestGrid {
  std::vector<int> n_trees{100, 300};
  std::vector<std::optional<int>> max_depth{std::nullopt, 10, 20};
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct ClassificationReport {
  std::array<std::array<std::size_t, 3>, 3> confusion{};  // [truth][prediction]
  std::array<ClassMetrics, 3> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
};

/// One-vs-rest metrics. Zero denominators give 0 with a flag. Macro averages
/// cover the classes seen in the truth or the predictions.
ClassificationReport classification_report(std::span<const Maneuver> truth, std::span<const Maneuver> predicted);
ClassificationReport evaluate_classifier(const ForestModel& model, const LabeledFeatures& test);

struct GridTrial {
  ForestParams params;
  double validation_macro_f1 = 0.0;
};

struct TuningResult {
  ForestModel model;
  std::vector<GridTrial> trials;
};

/// Trains every grid point on `train` and keeps the best validation macro-F1;
/// ties go to fewer trees, then the shallower depth.
TuningResult train_random_forest(const LabeledFeatures& train, const LabeledFeatures& validation,
                                 const ForestGrid& grid, std::uint64_t seed);

struct ProtocolConfig {
  int n_splits = 10;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  std::size_t smote_k = 5;
  ForestGrid grid;
  std::uint64_t seed = 0;
};

struct SplitOutcome {
  ForestParams chosen;
  double validation_macro_f1 = 0.0;
  ClassificationReport test;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

struct ProtocolResult {
  std::vector<SplitOutcome> splits;
  std::array<MetricSummary, 3> precision{};
  std::array<MetricSummary, 3> recall{};
  std::array<MetricSummary, 3> f1{};
  MetricSummary macro_f1;
  ForestModel model;  // selected on the first split
};

/// Repeated random train/validation/test partitions, stratified by label. Rows sharing a group
/// stay in one partition. SMOTE touches the training part only.
ProtocolResult run_protocol(const LabeledFeatures& data, const FeatureLayout& layout, const ProtocolConfig& cfg);

}  // namespace pvrisk::maneuver
