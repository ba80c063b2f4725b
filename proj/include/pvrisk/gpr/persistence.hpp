#pragma once

#include <filesystem>

#include <json.hpp>

#include "pvrisk/gpr/gpr.hpp"

namespace pvrisk::gpr {

inline constexpr int kModelFormatVersion = 1;

/// Hyperparameters, training data and standardization per present cell. The
/// factorization is recomputed on load.
nlohmann::json to_json(const ClusterModels& models);
ClusterModels cluster_models_from_json(const nlohmann::json& doc);

void save_cluster_models(const ClusterModels& models, const std::filesystem::path& path);
ClusterModels load_cluster_models(const std::filesystem::path& path);

}  // namespace pvrisk::gpr
