#include <CLI11.hpp>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cpol: Compton-polarimeter pair-correlation simulator and analysis toolkit"};
  app.require_subcommand(1);

  cpol::cli::CurvesOptions curves;
  auto* cmd_curves = app.add_subcommand("curves", "Export concurrence and analyzing-power curves");
  cmd_curves->add_option("--energy-kev", curves.energy_kev, "Incident photon energy [keV]");
  cmd_curves->add_option("--grid-deg", curves.grid_deg, "Theta grid step [deg]");
  cmd_curves->add_option("--output", curves.output_path, "Output CSV path");

  cpol::cli::FactorizeOptions factorize;
  auto* cmd_factorize =
      app.add_subcommand("factorize", "Check the visibility factorization identity");
  cmd_factorize->add_option("--energy-kev", factorize.energy_kev, "Pre-scatter incident energy");
  cmd_factorize->add_option("--theta-deg", factorize.theta_deg, "Pre-scattering angle [deg]");
  cmd_factorize->add_option("--theta-a-deg", factorize.theta_a_deg, "Polarimeter a angle [deg]");
  cmd_factorize->add_option("--theta-b-deg", factorize.theta_b_deg, "Polarimeter b angle [deg]");
  cmd_factorize->add_option("--grid", factorize.grid_size, "Random grid size (default 100)");
  cmd_factorize->add_option("--grid-seed", factorize.grid_seed, "Random grid seed");

  cpol::cli::SimulateOptions simulate;
  auto* cmd_simulate = app.add_subcommand("simulate", "Generate an event file");
  cmd_simulate->add_option("--config", simulate.config_path, "Run configuration JSON")
      ->required();
  cmd_simulate->add_option("--output", simulate.output_path, "Override output path");
  cmd_simulate->add_option("--seed", simulate.seed, "Override RNG seed");
  cmd_simulate->add_option("--workers", simulate.workers, "Worker threads (default 1)");

  cpol::cli::AnalyzeOptions analyze;
  auto* cmd_analyze = app.add_subcommand("analyze", "Extract concurrence from an event file");
  cmd_analyze->add_option("--events", analyze.events_path, "Event file path")->required();
  cmd_analyze->add_option("--config", analyze.config_path, "Override analysis configuration");
  cmd_analyze->add_option("--output", analyze.output_base, "Output base path");
  cmd_analyze->add_option("--method", analyze.method, "Fit method: direct|chsh");
  cmd_analyze->add_option("--classified", analyze.classified_path,
                          "Also write the per-event classification stream (CSV)");

  auto* cmd_verify = app.add_subcommand("verify", "Run the analytic oracle suite");

  CLI11_PARSE(app, argc, argv);

  if (cmd_curves->parsed()) return cpol::cli::cmd_curves(curves);
  if (cmd_factorize->parsed()) return cpol::cli::cmd_factorize(factorize);
  if (cmd_simulate->parsed()) return cpol::cli::cmd_simulate(simulate);
  if (cmd_analyze->parsed()) return cpol::cli::cmd_analyze(analyze);
  if (cmd_verify->parsed()) return cpol::cli::cmd_verify();
  return cpol::cli::exit_failure;
}
