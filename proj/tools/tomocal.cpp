// tomocal: simulate fan-beam data and run geometry self-calibration.
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "tomocal/harness.hpp"

namespace {

using tomocal::ExperimentConfig;

void print_summary(const tomocal::RunOutput& run) {
  const auto& last = run.result.trace.back();
  const auto& first = run.result.trace.front();
  auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("-"); };
  std::cout << run.config.name << ": iterations " << last.iter << ", rel_err_x " << show(first.rel_err_x) << " -> "
            << show(last.rel_err_x) << ", rel_err_d " << show(first.rel_err_d) << " -> " << show(last.rel_err_d)
            << ", rel_err_dtheta " << show(first.rel_err_dtheta) << " -> " << show(last.rel_err_dtheta) << '\n';
  for (const auto& f : run.files) std::cout << "  wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fan-beam CT reconstruction with per-block geometry self-calibration"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::map<std::string, std::string> overrides;

  auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--out-dir", out_dir, "output directory");
    for (const auto& key : ExperimentConfig::keys())
      cmd->add_option_function<std::string>("--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                            "override " + key);
  };

  auto* simulate = app.add_subcommand("simulate", "write phantom and sinogram for a configuration");
  add_config_options(simulate);
  auto* reconstruct = app.add_subcommand("reconstruct", "run one reconstruction scheme");
  add_config_options(reconstruct);

  auto* experiment = app.add_subcommand("experiment", "run a preset experiment");
  std::string preset;
  experiment->add_option("preset", preset, "preset name")->required()->check(CLI::IsMember(tomocal::preset_names()));
  experiment->add_option("--out-dir", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    auto resolve = [&] {
      ExperimentConfig config;
      try {
        if (!config_path.empty()) config = ExperimentConfig::from_file(config_path);
        for (const auto& [k, v] : overrides) config.set(k, v);
        config.validate();
      } catch (const std::exception& e) {
        throw tomocal::StageError("config", e.what());
      }
      return config;
    };

    if (*simulate) {
      for (const auto& f : tomocal::simulate(resolve(), out_dir)) std::cout << "wrote " << f.string() << '\n';
    } else if (*reconstruct) {
      print_summary(tomocal::run_experiment(resolve(), out_dir));
    } else if (*experiment) {
      for (const auto& config : tomocal::preset_configs(preset)) print_summary(tomocal::run_experiment(config, out_dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "tomocal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
