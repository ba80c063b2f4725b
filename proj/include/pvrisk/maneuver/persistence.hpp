#pragma once

#include <filesystem>

#include <json.hpp>

#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::maneuver {

inline constexpr int kForestFormatVersion = 1;

/// Trees as flat node arrays: split feature, threshold, child indices and the
/// leaf class distribution (left, right, straight).
nlohmann::json to_json(const ForestModel& model, const FeatureLayout& layout);
ForestModel forest_from_json(const nlohmann::json& doc, FeatureLayout* layout = nullptr);

void save_forest(const ForestModel& model, const FeatureLayout& layout, const std::filesystem::path& path);
ForestModel load_forest(const std::filesystem::path& path, FeatureLayout* layout = nullptr);

}  // namespace pvrisk::maneuver
