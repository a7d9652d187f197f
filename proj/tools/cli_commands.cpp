#include "cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "cpol/analysis.hpp"
#include "cpol/entanglement.hpp"
#include "cpol/errors.hpp"
#include "cpol/event_io.hpp"
#include "cpol/events.hpp"
#include "cpol/montecarlo.hpp"
#include "cpol/physics.hpp"
#include "cpol/quadrature.hpp"
#include "cpol/rng.hpp"
#include "cpol/run_config.hpp"

namespace cpol::cli {

namespace {

constexpr double deg = M_PI / 180.0;
constexpr double factorization_tolerance = 1e-9;

using io::format_g9;

void echo_effective_config(const RunConfig& cfg) {
  std::fprintf(stderr, "effective-config %s\n", run_config_to_json(cfg).c_str());
}

int map_exception(const std::exception& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
  if (dynamic_cast<const VersionError*>(&e)) return exit_version;
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  return exit_failure;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  return out;
}

/// Random three-scattering configurations over E in [0.05, 5] electron
/// masses with angles clear of the exact endpoints.
std::vector<entanglement::ThreeComptonConfig> factorization_grid(int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<entanglement::ThreeComptonConfig> grid;
  grid.reserve(n);
  for (int i = 0; i < n; ++i) {
    entanglement::ThreeComptonConfig cfg;
    cfg.e_in = physics::electron_mass_kev * rng.uniform(0.05, 5.0);
    cfg.theta = rng.uniform(1e-3, M_PI - 1e-3);
    cfg.theta_a = rng.uniform(1e-3, M_PI - 1e-3);
    cfg.theta_b = rng.uniform(1e-3, M_PI - 1e-3);
    grid.push_back(cfg);
  }
  return grid;
}

struct FactorizationReport {
  double max_residual_closed = 0.0;
  double max_residual_factorized = 0.0;
};

FactorizationReport run_factorization_grid(
    const std::vector<entanglement::ThreeComptonConfig>& grid, double me, bool print_rows) {
  FactorizationReport report;
  if (print_rows) {
    std::printf("%10s %9s %9s %9s %14s %14s %14s %11s %11s\n", "E_keV", "theta", "theta_a",
                "theta_b", "nu_quadrature", "nu_closed", "C*Aa*Ab", "res_closed", "res_factor");
  }
  for (const auto& cfg : grid) {
    const double nu_q = entanglement::visibility_from_quadrature(cfg, me);
    const double nu_closed = entanglement::visibility_closed_form(cfg, me);
    const double nu_fact = entanglement::visibility_factorized(cfg, me);
    const double res_closed = std::abs(nu_q - nu_closed);
    const double res_fact = std::abs(nu_q - nu_fact);
    report.max_residual_closed = std::max(report.max_residual_closed, res_closed);
    report.max_residual_factorized = std::max(report.max_residual_factorized, res_fact);
    if (print_rows) {
      std::printf("%10.3f %9.4f %9.4f %9.4f %14s %14s %14s %11.3e %11.3e\n", cfg.e_in, cfg.theta,
                  cfg.theta_a, cfg.theta_b, format_g9(nu_q).c_str(), format_g9(nu_closed).c_str(),
                  format_g9(nu_fact).c_str(), res_closed, res_fact);
    }
  }
  return report;
}

struct OracleReport {
  bool all_passed = true;

  void check(const std::string& name, bool passed, const std::string& detail) {
    std::printf("[%s] %s (%s)\n", passed ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    all_passed = all_passed && passed;
  }
};

std::string class_slug(std::size_t group_index) {
  if (group_index == 0) return "direct";
  if (group_index <= 5) return "pre" + std::to_string(group_index - 1);
  return "backscatter";
}

}  // namespace

int cmd_curves(const CurvesOptions& opt) {
  try {
    if (opt.energy_kev <= 0.0) throw ConfigError("/energy_kev", "must be positive");
    if (opt.grid_deg <= 0.0) throw ConfigError("/grid_deg", "must be positive");
    std::fprintf(stderr, "effective-config {\"curves\":{\"energy_kev\":%s,\"grid_deg\":%s}}\n",
                 format_g9(opt.energy_kev).c_str(), format_g9(opt.grid_deg).c_str());

    auto out = open_output(opt.output_path);
    out << "theta_deg,c_qft,c_pure_model,analyzing_power\n";
    for (double theta_deg = 0.0; theta_deg <= 180.0 + 1e-9; theta_deg += opt.grid_deg) {
      const double theta = std::min(theta_deg, 180.0) * deg;
      out << format_g9(std::min(theta_deg, 180.0)) << ','
          << format_g9(entanglement::concurrence_qft(opt.energy_kev, theta)) << ','
          << format_g9(entanglement::concurrence_pure_model(opt.energy_kev, theta)) << ','
          << format_g9(physics::analyzing_power(opt.energy_kev, theta)) << '\n';
    }
    if (!out) throw IoError("write failure: " + opt.output_path);
    return exit_ok;
  } catch (const std::exception& e) {
    return map_exception(e);
  }
}

int cmd_factorize(const FactorizeOptions& opt) {
  try {
    std::vector<entanglement::ThreeComptonConfig> grid;
    if (opt.theta_deg || opt.theta_a_deg || opt.theta_b_deg || opt.energy_kev) {
      entanglement::ThreeComptonConfig cfg;
      cfg.e_in = opt.energy_kev.value_or(physics::electron_mass_kev);
      cfg.theta = opt.theta_deg.value_or(90.0) * deg;
      cfg.theta_a = opt.theta_a_deg.value_or(90.0) * deg;
      cfg.theta_b = opt.theta_b_deg.value_or(90.0) * deg;
      grid.push_back(cfg);
    } else {
      grid = factorization_grid(opt.grid_size, opt.grid_seed);
    }
    std::fprintf(stderr,
                 "effective-config {\"factorize\":{\"configs\":%zu,\"tolerance\":%s}}\n",
                 grid.size(), format_g9(factorization_tolerance).c_str());

    const auto report = run_factorization_grid(grid, physics::electron_mass_kev, true);
    std::printf("max residual vs closed form:   %.3e\n", report.max_residual_closed);
    std::printf("max residual vs C * A_a * A_b: %.3e\n", report.max_residual_factorized);
    const bool ok = report.max_residual_closed < factorization_tolerance &&
                    report.max_residual_factorized < factorization_tolerance;
    std::printf("%s\n", ok ? "factorization holds" : "factorization violated");
    return ok ? exit_ok : exit_oracle;
  } catch (const QuadratureError& e) {
    std::fprintf(stderr, "quadrature failure: %s (achieved %.3e)\n", e.what(), e.achieved);
    return exit_oracle;
  } catch (const std::exception& e) {
    return map_exception(e);
  }
}

int cmd_simulate(const SimulateOptions& opt) {
  try {
    RunConfig cfg = load_run_config(opt.config_path);
    if (opt.seed) cfg.source.seed = *opt.seed;
    if (opt.output_path) cfg.output_path = *opt.output_path;
    if (opt.workers < 1) throw ConfigError("/workers", "must be >= 1");
    echo_effective_config(cfg);

    io::EventFileWriter writer(cfg.output_path, io::make_header(cfg));
    mc::RunStats stats;
    std::uint64_t pairs_written = 0;
    try {
      stats = mc::run_simulation(cfg.source, cfg.geometry, opt.workers,
                                 [&](std::span<const events::EventRecord> chunk) {
                                   writer.write(chunk);
                                   pairs_written += chunk.size();
                                 });
      writer.close();
    } catch (const IoError& e) {
      std::fprintf(stderr, "I/O failure after %llu pairs: %s\n",
                   static_cast<unsigned long long>(pairs_written), e.what());
      return exit_io;
    }

    std::printf("pairs            %llu\n", static_cast<unsigned long long>(stats.generated));
    std::printf("triggered        %llu\n", static_cast<unsigned long long>(stats.triggered));
    std::printf("lost             %llu\n", static_cast<unsigned long long>(stats.lost));
    std::printf("prescattered_a   %llu\n", static_cast<unsigned long long>(stats.prescattered_a));
    std::printf("prescattered_b   %llu\n", static_cast<unsigned long long>(stats.prescattered_b));
    std::printf("prescattered_both %llu\n",
                static_cast<unsigned long long>(stats.prescattered_both));
    std::printf("sampler_acceptance %.4f\n", stats.sampler_acceptance());
    return exit_ok;
  } catch (const std::exception& e) {
    return map_exception(e);
  }
}

int cmd_analyze(const AnalyzeOptions& opt) {
  try {
    io::EventFile file = io::read_event_file(opt.events_path);
    RunConfig cfg = file.header.effective_config;
    if (opt.config_path) {
      RunConfig override_cfg = load_run_config(*opt.config_path);
      cfg.binning = override_cfg.binning;
      cfg.method = override_cfg.method;
    }
    if (opt.method) {
      if (*opt.method == "direct") {
        cfg.method = analysis::FitMethod::direct;
      } else if (*opt.method == "chsh") {
        cfg.method = analysis::FitMethod::chsh;
      } else {
        throw ConfigError("/method", "must be 'direct' or 'chsh'");
      }
    }
    echo_effective_config(cfg);

    const auto points = analysis::concurrence_curve(file.records, cfg.binning, cfg.geometry,
                                                    cfg.method, cfg.source.photon_energy_kev);
    if (points.empty()) {
      std::fprintf(stderr, "warning: no analyzable events\n");
    }

    if (opt.classified_path) {
      auto out = open_output(*opt.classified_path);
      out << "# config " << run_config_to_json(cfg) << '\n';
      out << "id,class,bin,theta_deg,phi_deg\n";
      for (const auto& rec : file.records) {
        const auto cls =
            events::classify(rec, cfg.binning, cfg.source.photon_energy_kev);
        const char* tag = "rejected";
        if (cls.tag == events::EventTag::direct) tag = "direct";
        if (cls.tag == events::EventTag::pre_scattered) tag = "pre_scattered";
        if (cls.tag == events::EventTag::backscatter) tag = "backscatter";
        out << rec.event_id << ',' << tag << ',' << cls.bin << ',';
        if (cls.reconstructed_theta) out << format_g9(*cls.reconstructed_theta / deg);
        out << ',';
        if (cls.tag != events::EventTag::rejected) {
          out << format_g9(events::azimuthal_angle(rec, cls, cfg.geometry) / deg);
        }
        out << '\n';
      }
      if (!out) throw IoError("write failure: " + *opt.classified_path);
    }

    auto out = open_output(opt.output_base + "_concurrence.csv");
    out << "# config " << run_config_to_json(cfg) << '\n';
    out << "theta_low_deg,theta_high_deg,theta_mean_deg,nu,sigma_nu,chi2_ndf,a_bar_a,a_bar_b,"
           "c,sigma_c\n";
    std::printf("%11s %11s %8s %9s %9s %8s %7s %7s %9s %9s\n", "theta_lo", "theta_hi", "n",
                "nu", "sigma_nu", "chi2ndf", "A_a", "A_b", "C", "sigma_C");
    for (const auto& pt : points) {
      out << format_g9(pt.theta_low / deg) << ',' << format_g9(pt.theta_high / deg) << ','
          << format_g9(pt.theta_mean / deg) << ',' << format_g9(pt.nu.nu) << ','
          << format_g9(pt.nu.sigma_nu) << ',' << format_g9(pt.nu.chi2_ndf) << ','
          << format_g9(pt.mean_a_a) << ',' << format_g9(pt.mean_a_b) << ',' << format_g9(pt.c)
          << ',' << format_g9(pt.sigma_c) << '\n';
      std::printf("%11.3f %11.3f %8zu %9.5f %9.5f %8.3f %7.4f %7.4f %9.5f %9.5f%s\n",
                  pt.theta_low / deg, pt.theta_high / deg, pt.n_events, pt.nu.nu, pt.nu.sigma_nu,
                  pt.nu.chi2_ndf, pt.mean_a_a, pt.mean_a_b, pt.c, pt.sigma_c,
                  pt.low_statistics ? "  low-statistics" : "");
    }
    if (!out) throw IoError("write failure: " + opt.output_base + "_concurrence.csv");

    // Per-class azimuthal histograms for external plotting.
    struct Group {
      analysis::ClassFilter filter;
    };
    std::vector<Group> groups;
    groups.push_back({{events::EventTag::direct, -1}});
    for (int bin = 0; bin < 5; ++bin) groups.push_back({{events::EventTag::pre_scattered, bin}});
    groups.push_back({{events::EventTag::backscatter, -1}});
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto hist = analysis::histogram_events(file.records, groups[i].filter, cfg.binning,
                                                   cfg.geometry, cfg.source.photon_energy_kev);
      double total = 0.0;
      for (double c : hist.counts) total += c;
      if (total == 0.0) {
        std::fprintf(stderr, "warning: class %s empty, histogram omitted\n",
                     class_slug(i).c_str());
        continue;
      }
      auto hist_out = open_output(opt.output_base + "_hist_" + class_slug(i) + ".csv");
      hist_out << "# config " << run_config_to_json(cfg) << '\n';
      hist_out << "phi_deg,count\n";
      for (std::size_t k = 0; k < hist.n_bins(); ++k) {
        hist_out << format_g9(hist.bin_centers[k] / deg) << ','
                 << format_g9(hist.counts[k]) << '\n';
      }
    }
    return exit_ok;
  } catch (const std::exception& e) {
    return map_exception(e);
  }
}

int cmd_verify() {
  OracleReport report;
  const double me = physics::electron_mass_kev;
  char detail[160];

  try {
    // Analyzing power must equal the count asymmetry built from the polarized
    // cross-section weight.
    {
      double worst = 0.0;
      for (double e : {51.1, 255.5, 511.0, 1533.0}) {
        for (int i = 1; i < 32; ++i) {
          const double theta = M_PI * i / 32;
          const physics::LinearPolarization pol{0.0, 1.0};
          const double p_perp = physics::klein_nishina_weight(e, theta, M_PI / 2.0, pol);
          const double p_par = physics::klein_nishina_weight(e, theta, 0.0, pol);
          const double asym = (p_perp - p_par) / (p_perp + p_par);
          worst = std::max(worst, std::abs(asym - physics::analyzing_power(e, theta)));
        }
      }
      std::snprintf(detail, sizeof(detail), "max deviation %.2e", worst);
      report.check("analyzing-power asymmetry identity", worst < 1e-12, detail);
    }

    // Polarization-flip probabilities: forward limit, ordering, 90-degree
    // values, and the Stokes-transfer marginals they pin down.
    {
      const auto p0 = physics::transition_probabilities(me, 1e-8);
      const auto p90 = physics::transition_probabilities(me, M_PI / 2.0);
      bool ok = p0.p_v_to_h < 1e-12 && p0.p_h_to_v < 1e-12;
      ok = ok && std::abs(p90.p_v_to_h - 0.1) < 1e-12;
      ok = ok && std::abs(p90.p_h_to_v - 1.0 / 6.0) < 1e-12;
      for (int i = 1; i < 16; ++i) {
        const auto p = physics::transition_probabilities(me, M_PI * i / 16);
        ok = ok && p.p_h_to_v >= p.p_v_to_h;
      }
      const auto v_in = physics::stokes_relative_to_plane({M_PI / 2.0, 1.0}, 0.0);
      const auto out = physics::stokes_compton_transfer(
          v_in, M_PI / 2.0, physics::make_kinematics(me, M_PI / 2.0).gamma);
      const double analyzer_h = 0.5 * (1.0 - out.out.q);
      ok = ok && std::abs(analyzer_h - 0.1) < 1e-12;
      const auto unpol = physics::stokes_compton_transfer(
          {0.0, 0.0}, M_PI / 3.0, physics::make_kinematics(me, M_PI / 3.0).gamma);
      ok = ok && std::abs(std::hypot(unpol.out.q, unpol.out.u) -
                          physics::analyzing_power(me, M_PI / 3.0)) < 1e-12;
      report.check("polarization-transfer marginals", ok, "forward limit, ordering, 90-deg values");
    }

    // Concurrence endpoints for both models across energies.
    {
      double worst = 0.0;
      for (int i = 0; i < 20; ++i) {
        const double e = me * (0.05 + 4.95 * i / 19.0);
        const double gamma_pi =
            physics::gamma_factor(e, physics::scattered_energy(e, M_PI));
        worst = std::max(worst, std::abs(entanglement::concurrence_qft(e, 0.0) - 1.0));
        worst = std::max(worst, std::abs(entanglement::concurrence_pure_model(e, 0.0) - 1.0));
        worst = std::max(worst,
                         std::abs(entanglement::concurrence_qft(e, M_PI) - 2.0 / gamma_pi));
        worst = std::max(
            worst, std::abs(entanglement::concurrence_pure_model(e, M_PI) - 2.0 / gamma_pi));
      }
      worst = std::max(worst, std::abs(entanglement::concurrence_qft(me, M_PI) - 0.6));
      std::snprintf(detail, sizeof(detail), "max deviation %.2e over 20 energies", worst);
      report.check("concurrence endpoints", worst < 1e-12, detail);
    }

    // Analyzing-power maximum for annihilation photons.
    {
      double best_theta = 0.0, best = 0.0;
      for (double t = 60.0; t <= 100.0; t += 0.001) {
        const double a = physics::analyzing_power(me, t * deg);
        if (a > best) {
          best = a;
          best_theta = t;
        }
      }
      const bool ok = std::abs(best_theta - 82.0) < 0.5 && std::abs(best - 0.69) < 0.005 &&
                      std::abs(physics::analyzing_power(me, M_PI / 2.0) - 2.0 / 3.0) < 1e-15;
      std::snprintf(detail, sizeof(detail), "max A=%.4f at %.2f deg; A(90)=2/3", best, best_theta);
      report.check("analyzing-power maximum", ok, detail);
    }

    // Visibility factorization on the random grid.
    {
      const auto grid = factorization_grid(100, 20240901);
      const auto fact = run_factorization_grid(grid, me, false);
      std::snprintf(detail, sizeof(detail), "max residuals %.2e / %.2e over 100 configs",
                    fact.max_residual_closed, fact.max_residual_factorized);
      report.check("visibility factorization",
                   fact.max_residual_closed < factorization_tolerance &&
                       fact.max_residual_factorized < factorization_tolerance,
                   detail);
    }

    // Classical coincidence integrals against their closed forms.
    {
      RngStream rng(17, 0);
      double worst = 0.0, worst_nu = 0.0;
      for (int i = 0; i < 10; ++i) {
        const double ta = rng.uniform(0.1, M_PI - 0.1);
        const double tb = rng.uniform(0.1, M_PI - 0.1);
        const double ea = me * rng.uniform(0.2, 3.0);
        const double eb = me * rng.uniform(0.2, 3.0);
        const auto ci = entanglement::classical_integrals(ta, tb, ea, eb);
        const double s2a = std::pow(std::sin(ta), 2);
        const double s2b = std::pow(std::sin(tb), 2);
        const double ga = physics::gamma_factor(ea, physics::scattered_energy(ea, ta));
        const double gb = physics::gamma_factor(eb, physics::scattered_energy(eb, tb));
        worst = std::max(worst, std::abs(ci.p_perp - ci.p_par - 2.0 * s2a * s2b));
        worst = std::max(worst,
                         std::abs(ci.p_perp + ci.p_par - 4.0 * (ga - s2a) * (gb - s2b)));
        const double nu = (ci.p_perp - ci.p_par) / (ci.p_perp + ci.p_par);
        worst_nu =
            std::max(worst_nu, std::abs(nu - entanglement::visibility_classical(ea, ta, eb, tb)));
      }
      std::snprintf(detail, sizeof(detail), "max closed-form deviation %.2e, nu deviation %.2e",
                    worst, worst_nu);
      report.check("classical-correlation integrals", worst < 1e-10 && worst_nu < 1e-10, detail);
    }

    // Mutation sensitivity: sign flips in the angular correlation must break
    // the factorization oracle, proving it is alive.
    {
      const entanglement::ThreeComptonConfig cfg{me, 60.0 * deg, 80.0 * deg, 100.0 * deg};
      const auto mutated_nu = [&](double cos_sign, double dterm_sign) {
        const auto dir = entanglement::convention_for(cfg);
        double mean = 0.0, amp = 0.0;
        for (int i = 0; i < 64; ++i) {
          const double phi = M_PI * i / 64.0;
          const auto integrand = [&](double phi_b) {
            const double phi_a =
                dir == entanglement::AzimuthConvention::forward ? phi - phi_b : phi_b - phi;
            return entanglement::three_compton_probability_signed(cfg, phi_a, phi_b, cos_sign,
                                                                  dterm_sign);
          };
          const double r = integrate(integrand, 0.0, M_PI, 256) / M_PI;
          mean += r;
          amp += r * std::cos(2.0 * phi);
        }
        mean /= 64.0;
        amp *= 2.0 / 64.0;
        return -amp / mean;
      };
      const double target = entanglement::visibility_factorized(cfg);
      const double res_cos = std::abs(mutated_nu(-1.0, 1.0) - target);
      const double res_dterm = std::abs(mutated_nu(1.0, -1.0) - target);
      std::snprintf(detail, sizeof(detail),
                    "flipped-sign residuals %.2e / %.2e exceed tolerance", res_cos, res_dterm);
      report.check("mutation sensitivity", res_cos > 1e-6 && res_dterm > 1e-6, detail);
    }

    // Shifting the electron-mass constant must leave the factorization
    // identity intact (energies are chained consistently) while moving the
    // endpoint values.
    {
      const double me_shifted = me + 1.0;
      const auto grid = factorization_grid(20, 777);
      double worst = 0.0;
      for (const auto& cfg : grid) {
        worst = std::max(worst, entanglement::factorization_residual(cfg, me_shifted));
      }
      const double endpoint = entanglement::concurrence_qft(me, M_PI, me_shifted);
      const bool ok = worst < factorization_tolerance && std::abs(endpoint - 0.6) > 1e-5;
      std::snprintf(detail, sizeof(detail),
                    "residual %.2e at me+1keV; backward endpoint shifts to %.6f", worst, endpoint);
      report.check("electron-mass consistency", ok, detail);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "verify aborted: %s\n", e.what());
    return exit_oracle;
  }

  std::printf("%s\n", report.all_passed ? "all oracles passed" : "oracle failures detected");
  return report.all_passed ? exit_ok : exit_oracle;
}

}  // namespace cpol::cli
