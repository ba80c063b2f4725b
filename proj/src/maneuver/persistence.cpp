#include "pvrisk/maneuver/persistence.hpp"

#include <fstream>

#include "pvrisk/errors.hpp"

namespace pvrisk::maneuver {

using nlohmann::json;

json to_json(const ForestModel& model, const FeatureLayout& layout) {
  json trees = json::array();
  for (const DecisionTree& t : model.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
      if (n.feature < 0)
        nodes.push_back({{"leaf", n.distribution}});
      else
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    trees.push_back(std::move(nodes));
  }
  json depth = model.params.max_depth ? json(*model.params.max_depth) : json(nullptr);
  return {{"format", "pvrisk-forest"},
          {"version", kForestFormatVersion},
          {"velocity_features", layout.velocity == VelocityFeatures::Magnitude ? "magnitude" : "components"},
          {"n_features", model.n_features},
          {"n_trees", model.params.n_trees},
          {"max_depth", std::move(depth)},
          {"min_samples_split", model.params.min_samples_split},
          {"max_features", model.params.max_features},
          {"seed", model.seed},
          {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& doc, FeatureLayout* layout) {
  try {
    if (doc.value("format", "") != "pvrisk-forest") throw InputError("forest file: wrong format tag");
    if (doc.at("version").get<int>() != kForestFormatVersion) throw InputError("forest file: unsupported version");
    ForestModel m;
    m.n_features = doc.at("n_features").get<std::size_t>();
    m.params.n_trees = doc.at("n_trees").get<int>();
    if (!doc.at("max_depth").is_null()) m.params.max_depth = doc.at("max_depth").get<int>();
    m.params.min_samples_split = doc.at("min_samples_split").get<std::size_t>();
    m.params.max_features = doc.at("max_features").get<std::size_t>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const json& jt : doc.at("trees")) {
      DecisionTree t;
      for (const json& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.distribution = jn.at("leaf").get<std::array<double, 3>>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          const auto size = static_cast<int>(jt.size());
          if (n.feature >= static_cast<int>(m.n_features) || n.left < 0 || n.right < 0 || n.left >= size ||
              n.right >= size)
            throw InputError("forest file: malformed node");
        }
        t.nodes.push_back(n);
      }
      if (t.nodes.empty()) throw InputError("forest file: empty tree");
      m.trees.push_back(std::move(t));
    }
    if (layout) {
      const std::string v = doc.value("velocity_features", "magnitude");
      layout->velocity = v == "components" ? VelocityFeatures::Components : VelocityFeatures::Magnitude;
      if (layout->size() != m.n_features) throw InputError("forest file: feature count does not match layout");
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("forest file: ") + e.what());
  }
}

void save_forest(const ForestModel& model, const FeatureLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(model, layout).dump() << '\n';
}

ForestModel load_forest(const std::filesystem::path& path, FeatureLayout* layout) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return forest_from_json(doc, layout);
}

}  // namespace pvrisk::maneuver
