#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pvrisk/app/commands.hpp"
#include "pvrisk/errors.hpp"

namespace {

struct Options {
  std::string config;
  std::string in;
  std::string out = ".";
  std::string models;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o, bool needs_input) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  auto* in = cmd->add_option("--in", o.in, "Input CSV");
  if (needs_input) in->required();
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Overrides the configured seed");
}

pvrisk::app::RunConfig resolve(const Options& o) {
  auto cfg = o.config.empty() ? pvrisk::app::default_config() : pvrisk::app::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian-vehicle conflict risk pipeline"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic intersection scene");
  add_common(synth, o, false);
  auto* pre = app.add_subcommand("preprocess", "Label vehicles and clean pedestrian tracks");
  add_common(pre, o, true);
  auto* train = app.add_subcommand("train", "Fit cluster GPR models and the maneuver forest");
  add_common(train, o, true);
  auto* risk = app.add_subcommand("risk", "Score vehicle-pedestrian pairs and evaluate detection");
  add_common(risk, o, true);
  risk->add_option("--models", o.models, "Directory holding gpr_models.json and forest.json (default: --out)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    if (*synth) {
      pvrisk::app::cmd_synth(cfg, o.out);
    } else if (*pre) {
      pvrisk::app::cmd_preprocess(cfg, o.in, o.out);
    } else if (*train) {
      pvrisk::app::cmd_train(cfg, o.in, o.out);
    } else if (*risk) {
      pvrisk::app::cmd_risk(cfg, o.in, o.models.empty() ? o.out : o.models, o.out);
    }
  } catch (const pvrisk::NumericalError& e) {
    std::cerr << "pvrisk: numerical failure in " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pvrisk: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
