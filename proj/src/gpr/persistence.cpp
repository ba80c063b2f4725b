#include "pvrisk/gpr/persistence.hpp"

#include <fstream>

#include "pvrisk/errors.hpp"

namespace pvrisk::gpr {

namespace {

using nlohmann::json;

json model_to_json(const GprModel& m) {
  const KernelConfig& k = m.kernel();
  json inputs = json::array();
  for (const Vec2& p : m.train_inputs()) inputs.push_back({p.x, p.y});
  return {
      {"kernel",
       {{"kind", std::string(to_string(k.kind))},
        {"length_scale", k.length_scale},
        {"rq_alpha", k.rq_alpha},
        {"noise_variance", k.noise_variance},
        {"jitter", k.jitter}}},
      {"standardization", {{"mean", m.standardization().mean}, {"scale", m.standardization().scale}}},
      {"inputs", std::move(inputs)},
      {"targets", m.train_targets()},
      {"loss_trace", m.loss_trace()},
  };
}

GprModel model_from_json(const json& j) {
  const json& k = j.at("kernel");
  KernelConfig cfg;
  const auto kind = parse_kernel_kind(k.at("kind").get<std::string>());
  if (!kind) throw InputError("model file: unknown kernel kind");
  cfg.kind = *kind;
  cfg.length_scale = k.at("length_scale").get<double>();
  cfg.rq_alpha = k.at("rq_alpha").get<double>();
  cfg.noise_variance = k.at("noise_variance").get<double>();
  cfg.jitter = k.at("jitter").get<double>();
  Standardization s{j.at("standardization").at("mean").get<double>(),
                    j.at("standardization").at("scale").get<double>()};
  std::vector<Vec2> inputs;
  for (const json& p : j.at("inputs")) inputs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  GprModel m = GprModel::condition(std::move(inputs), j.at("targets").get<std::vector<double>>(), cfg, s);
  m.set_loss_trace(j.value("loss_trace", std::vector<double>{}));
  return m;
}

}  // namespace

nlohmann::json to_json(const ClusterModels& models) {
  json clusters = json::array();
  for (const auto& slot : models.cells()) {
    if (!slot) continue;
    clusters.push_back({{"direction", std::string(to_string(slot->direction))},
                        {"maneuver", std::string(to_string(slot->maneuver))},
                        {"gp_x", model_to_json(slot->gp_x)},
                        {"gp_y", model_to_json(slot->gp_y)}});
  }
  return {{"format", "pvrisk-gpr"}, {"version", kModelFormatVersion}, {"clusters", std::move(clusters)}};
}

ClusterModels cluster_models_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "pvrisk-gpr") throw InputError("model file: not a GPR cluster model file");
    if (doc.at("version").get<int>() != kModelFormatVersion) throw InputError("model file: unsupported version");
    ClusterModels models;
    for (const json& c : doc.at("clusters")) {
      const auto d = parse_direction(c.at("direction").get<std::string>());
      const auto m = parse_maneuver(c.at("maneuver").get<std::string>());
      if (!d || !m) throw InputError("model file: bad cluster label");
      models.set({model_from_json(c.at("gp_x")), model_from_json(c.at("gp_y")), *d, *m});
    }
    return models;
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

void save_cluster_models(const ClusterModels& models, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(models).dump(1) << '\n';
}

ClusterModels load_cluster_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return cluster_models_from_json(doc);
}

}  // namespace pvrisk::gpr
