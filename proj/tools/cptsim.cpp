#include <iostream>

#include <CLI11.hpp>

#include "cpt/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Four-level CPT master-equation simulator"};
  app.set_version_flag("--version", CPT_VERSION);
  app.require_subcommand(1);

  cpt::CommandOptions opt;
  std::string config_path;
  std::uint64_t seed = 0;
  double dt = 0.0;
  int phases = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", opt.overrides, "dotted-path override, e.g. drive.fp_ghz=6.03")->take_all();
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--jobs", opt.jobs, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--dt", dt, "RK4 step, ns")->check(CLI::PositiveNumber);
    cmd->add_option("--phases", phases, "relative-phase samples")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "phase-averaged trajectory to t0");
  add_common(simulate);
  auto* sweep = app.add_subcommand("sweep", "grid sweep from the config's sweep section");
  add_common(sweep);
  auto* reproduce = app.add_subcommand("reproduce", "figure datasets and summary");
  std::string figure;
  reproduce->add_option("figure", figure, "fig2, fig3, fig4 or fig4-inset")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig4-inset"}));
  add_common(reproduce);
  auto* fit = app.add_subcommand("fit", "fit dephasing times to an observed t_ns,p2 trace");
  std::string csv;
  std::vector<std::string> free;
  fit->add_option("observed", csv, "observed CSV")->required();
  fit->add_option("--free", free, "free parameter: tphi_01, tphi_02, tphi_12")->take_all();
  add_common(fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cpt::kExitInput;
  }

  CLI::App* active = app.get_subcommands().front();
  if (!config_path.empty()) opt.config_path = config_path;
  if (active->count("--seed")) opt.seed = seed;
  if (active->count("--dt")) opt.dt = dt;
  if (active->count("--phases")) opt.phases = phases;

  if (active == simulate) return cpt::cmd_simulate(opt, std::cout, std::cerr);
  if (active == sweep) return cpt::cmd_sweep(opt, std::cout, std::cerr);
  if (active == reproduce) return cpt::cmd_reproduce(figure, opt, std::cout, std::cerr);
  return cpt::cmd_fit(csv, free, opt, std::cout, std::cerr);
}
