#pragma once

#include <optional>
#include <string>

namespace cpol::cli {

/// Stable exit codes shared by all subcommands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_io = 3;
inline constexpr int exit_version = 4;
inline constexpr int exit_oracle = 5;

struct CurvesOptions {
  double energy_kev = 511.0;
  double grid_deg = 1.0;
  std::string output_path = "curves.csv";
};

struct FactorizeOptions {
  std::optional<double> energy_kev;
  std::optional<double> theta_deg;
  std::optional<double> theta_a_deg;
  std::optional<double> theta_b_deg;
  int grid_size = 100;
  std::uint64_t grid_seed = 20240901;
};

struct SimulateOptions {
  std::string config_path;
  std::optional<std::string> output_path;
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

struct AnalyzeOptions {
  std::string events_path;
  std::optional<std::string> config_path;
  std::string output_base = "analysis";
  std::optional<std::string> method;
  /// When set, also writes the per-event classification stream here.
  std::optional<std::string> classified_path;
};

int cmd_curves(const CurvesOptions& opt);
int cmd_factorize(const FactorizeOptions& opt);
int cmd_simulate(const SimulateOptions& opt);
int cmd_analyze(const AnalyzeOptions& opt);
int cmd_verify();

}  // namespace cpol::cli
