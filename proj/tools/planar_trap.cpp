// planar-trap <subcommand> --config <path> [--out <dir>] [--override key=value]...

#include <iostream>

#include <CLI11.hpp>

#include "ptrap/commands.hpp"
#include "ptrap/config.hpp"
#include "ptrap/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Planar surface-electrode RF ion trap toolkit"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  const char* names[] = {"validate", "map", "characterize", "compensate", "crystal", "stability"};
  const char* help[] = {"check the layout and list rule violations",
                        "write per-electrode potentials and fields on a point set",
                        "locate the RF null and trap minimum and report the trap",
                        "solve control voltages for field nulling and axial curvature",
                        "ion chain positions and axial modes",
                        "Mathieu parameters with band and Floquet verdicts"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory, overrides output_dir");
    sub->add_option("--override", overrides, "dotted.key=value applied to the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto command = ptrap::command_from_string(app.get_subcommands().front()->get_name());
  ptrap::RunConfig config;
  try {
    config = ptrap::parse_config(config_path, overrides);
    if (!out_dir.empty()) config.output_dir = out_dir;
  } catch (const ptrap::TrapError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return e.is_config_error() ? 2 : 1;
  }
  return ptrap::run_command(*command, config, std::cerr);
}
