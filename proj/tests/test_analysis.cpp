#include <doctest.h>

#include <cmath>
#include <vector>

#include "cpol/analysis.hpp"
#include "cpol/errors.hpp"
#include "cpol/montecarlo.hpp"
#include "cpol/rng.hpp"

using namespace cpol;
using namespace cpol::analysis;

namespace {

constexpr double me = physics::electron_mass_kev;

AngleHistogram exact_histogram(double p0, double nu, const GeometryConfig& cfg) {
  AngleHistogram hist = make_histogram(cfg);
  for (std::size_t k = 0; k < hist.n_bins(); ++k) {
    hist.counts[k] =
        p0 * hist.exposure[k] * (1.0 - hist.attenuation * nu * std::cos(2.0 * hist.bin_centers[k]));
  }
  return hist;
}

double poisson_round(double lambda, RngStream& rng) {
  return std::max(0.0, std::round(lambda + std::sqrt(lambda) * rng.normal()));
}

events::EventRecord direct_record(int counter_a, int counter_b, double e_main = 255.5) {
  events::EventRecord rec;
  rec.counter_a = counter_a;
  rec.counter_b = counter_b;
  rec.e_main_a = e_main;
  rec.e_main_b = e_main;
  rec.e_counter_a = 511.0 - e_main;
  rec.e_counter_b = 511.0 - e_main;
  return rec;
}

}  // namespace

TEST_CASE("histogram construction over the counter ring") {
  GeometryConfig cfg;
  const auto hist = make_histogram(cfg);
  CHECK(hist.n_bins() == 9);
  CHECK(hist.bin_centers.back() == doctest::Approx(M_PI));
  CHECK(hist.exposure.front() == doctest::Approx(1.0));
  CHECK(hist.exposure[4] == doctest::Approx(2.0));
  CHECK(hist.exposure.back() == doctest::Approx(1.0));
  const double q = std::sin(M_PI / 8.0) / (M_PI / 8.0);
  CHECK(hist.attenuation == doctest::Approx(q * q).epsilon(1e-14));
}

TEST_CASE("direct fit recovers exact synthetic data") {
  std::vector<double> counts(9);
  for (int k = 0; k < 9; ++k) {
    counts[k] = 1000.0 * (1.0 - 0.5 * std::cos(2.0 * (M_PI * k / 8.0)));
  }
  const auto hist = make_synthetic_histogram(counts);
  const auto fit = fit_direct(hist);
  CHECK(fit.nu == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.p0 == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(fit.chi2_ndf < 1e-18);
}

TEST_CASE("flat data fit is a calibrated null") {
  GeometryConfig cfg;
  RngStream rng(41, 0);
  auto hist = exact_histogram(2000.0, 0.0, cfg);
  for (auto& c : hist.counts) c = poisson_round(c, rng);
  const auto fit = fit_direct(hist);
  CHECK(std::abs(fit.nu) < 3.0 * fit.sigma_nu);
  CHECK(fit.chi2_ndf < 3.0);
}

TEST_CASE("fit preconditions") {
  GeometryConfig cfg;
  auto hist = make_histogram(cfg);
  hist.counts[0] = 10.0;
  hist.counts[4] = 12.0;
  CHECK_THROWS_AS((void)fit_direct(hist), FitError);
}

TEST_CASE("direct and S-function fits agree exactly on noiseless data") {
  GeometryConfig cfg;
  for (double nu : {0.0, 0.1, 0.444, 0.9}) {
    const auto hist = exact_histogram(50000.0, nu, cfg);
    const auto fd = fit_direct(hist);
    const auto fc = fit_chsh(hist);
    CHECK(std::abs(fd.nu - nu) < 1e-12);
    CHECK(std::abs(fc.nu - nu) < 1e-12);
    CHECK(std::abs(fd.nu - fc.nu) < 1e-12);
  }
}

TEST_CASE("S-function construction") {
  GeometryConfig cfg;
  SUBCASE("flat histogram gives identically zero S") {
    auto hist = make_histogram(cfg);
    for (std::size_t k = 0; k < hist.n_bins(); ++k) hist.counts[k] = 500.0 * hist.exposure[k];
    const auto curve = build_s_function(hist);
    for (double s : curve.s) CHECK(std::abs(s) < 1e-12);
  }
  SUBCASE("reference values on exact modulated data") {
    auto hist = make_histogram(cfg);
    hist.attenuation = 1.0;  // sample the model at the bin centers exactly
    for (std::size_t k = 0; k < hist.n_bins(); ++k) {
      hist.counts[k] =
          10000.0 * hist.exposure[k] * (1.0 - 0.4 * std::cos(2.0 * hist.bin_centers[k]));
    }
    const auto curve = build_s_function(hist);
    CHECK(curve.s[1] == doctest::Approx(-2.0 * std::sqrt(2.0) * 0.4).epsilon(1e-12));
    CHECK(std::abs(curve.s[2]) < 1e-12);  // 45 degrees
  }
  SUBCASE("malformed histogram is rejected") {
    AngleHistogram broken;
    broken.bin_centers = {0.0, 1.0};
    broken.counts = {1.0};
    CHECK_THROWS_AS((void)build_s_function(broken), FitError);
  }
}

TEST_CASE("S-function fit sigma conventions") {
  GeometryConfig cfg;
  RngStream rng(43, 0);
  auto hist = exact_histogram(20000.0, 0.2, cfg);
  for (auto& c : hist.counts) c = poisson_round(c, rng);
  const auto fd = fit_direct(hist);
  const auto fc = fit_chsh(hist);
  CHECK(std::abs(fd.nu - fc.nu) < 3.0 * fd.sigma_nu);
  // the per-point convention underestimates; the covariance-aware sigma does not
  CHECK(fc.sigma_nu < fd.sigma_nu);
  CHECK(chsh_sigma_correlated(hist) > fc.sigma_nu);
}

TEST_CASE("ratio estimator tracks the fitted visibility") {
  GeometryConfig cfg;
  RngStream rng(47, 0);
  auto hist = exact_histogram(30000.0, 0.25, cfg);
  for (auto& c : hist.counts) c = poisson_round(c, rng);
  const auto fit = fit_direct(hist);
  const double ratio = ratio_visibility(hist);
  CHECK(std::abs(ratio - fit.nu) < 3.0 * fit.sigma_nu);
}

TEST_CASE("fit pulls are calibrated over repetitions") {
  GeometryConfig cfg;
  RngStream rng(53, 0);
  const double nu_true = 0.22;
  double sum = 0.0, sum_sq = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    auto hist = exact_histogram(5000.0, nu_true, cfg);
    for (auto& c : hist.counts) c = poisson_round(c, rng);
    const auto fit = fit_direct(hist);
    const double pull = (fit.nu - nu_true) / fit.sigma_nu;
    sum += pull;
    sum_sq += pull * pull;
  }
  const double mean = sum / reps;
  const double variance = sum_sq / reps - mean * mean;
  CHECK(std::abs(mean) < 0.1 + 2.0 / std::sqrt(reps));
  CHECK(variance > 0.75);
  CHECK(variance < 1.25);
}

TEST_CASE("visibility scaling under count rescaling") {
  GeometryConfig cfg;
  RngStream rng(59, 0);
  auto hist = exact_histogram(4000.0, 0.3, cfg);
  for (auto& c : hist.counts) c = poisson_round(c, rng);
  auto scaled = hist;
  for (auto& c : scaled.counts) c *= 16.0;
  const auto base = fit_direct(hist);
  const auto big = fit_direct(scaled);
  CHECK(big.nu == doctest::Approx(base.nu).epsilon(1e-12));
  CHECK(big.sigma_nu == doctest::Approx(base.sigma_nu / 4.0).epsilon(1e-12));
}

TEST_CASE("mean analyzing power from measured energies") {
  const auto scheme = events::default_binning_analytic(511.0, 10.0);
  SUBCASE("all events at 90 degrees give two thirds") {
    std::vector<events::EventRecord> records(50, direct_record(0, 4));
    const auto stats =
        mean_analyzing_power(records, Arm::partner, {events::EventTag::direct, -1}, scheme);
    CHECK(stats.mean == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(stats.n_events == 50);
  }
  SUBCASE("single-event stream returns that event's value") {
    std::vector<events::EventRecord> records{direct_record(2, 9, 300.0)};
    const auto stats =
        mean_analyzing_power(records, Arm::scattered, {events::EventTag::direct, -1}, scheme);
    CHECK(stats.mean ==
          doctest::Approx(physics::analyzing_power_from_energies(511.0, 211.0)).epsilon(1e-13));
  }
  SUBCASE("empty selection is an error") {
    std::vector<events::EventRecord> records;
    CHECK_THROWS_AS((void)mean_analyzing_power(records, Arm::partner,
                                               {events::EventTag::backscatter, -1}, scheme),
                    AnalysisError);
  }
}

TEST_CASE("concurrence extraction") {
  FitResult fit;
  fit.nu = 4.0 / 9.0;
  fit.sigma_nu = 0.01;
  SUBCASE("maximally entangled reference point") {
    const auto pt = extract_concurrence(fit, 2.0 / 3.0, 2.0 / 3.0);
    CHECK(pt.c == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pt.sigma_c == doctest::Approx(0.01 / (4.0 / 9.0)).epsilon(1e-12));
  }
  SUBCASE("zero visibility means zero concurrence") {
    fit.nu = 0.0;
    CHECK(extract_concurrence(fit, 0.5, 0.5).c == doctest::Approx(0.0));
  }
  SUBCASE("classical direct pairs give one half") {
    fit.nu = 2.0 / 9.0;
    CHECK(extract_concurrence(fit, 2.0 / 3.0, 2.0 / 3.0).c == doctest::Approx(0.5).epsilon(1e-13));
  }
  SUBCASE("ill-conditioned analyzing powers are rejected") {
    CHECK_THROWS_AS((void)extract_concurrence(fit, 1e-4, 1e-4), AnalysisError);
  }
  SUBCASE("analyzing-power spread widens the error in quadrature") {
    const auto tight = extract_concurrence(fit, 0.6, 0.6, 0.0, 0.0);
    const auto wide = extract_concurrence(fit, 0.6, 0.6, 0.02, 0.02);
    CHECK(wide.sigma_c > tight.sigma_c);
  }
}

TEST_CASE("concurrence curve on a synthetic direct stream") {
  GeometryConfig cfg;
  const auto scheme = events::default_binning_analytic(511.0, 10.0);
  RngStream rng(61, 0);
  const double nu_true = 2.0 / 9.0;
  std::vector<events::EventRecord> records;
  // continuous pair azimuths from the modulated coincidence density, then
  // sector-quantized exactly like the transport does
  for (int i = 0; i < 60000; ++i) {
    const double phi_a = rng.uniform(0.0, 2.0 * M_PI);
    double delta = 0.0;
    for (;;) {
      delta = rng.uniform(0.0, 2.0 * M_PI);
      if (rng.uniform() * (1.0 + nu_true) < 1.0 - nu_true * std::cos(2.0 * delta)) break;
    }
    const double phi_b = phi_a + delta;
    const int ca = static_cast<int>(std::lround(phi_a / cfg.counter_azimuth_step)) % 16;
    const int cb = (static_cast<int>(std::lround(phi_b / cfg.counter_azimuth_step)) % 16 + 16) % 16;
    records.push_back(direct_record(ca, cb));
  }
  const auto points = concurrence_curve(records, scheme, cfg, FitMethod::direct, 511.0);
  REQUIRE(points.size() == 1);  // only the direct class is populated
  CHECK(points[0].theta_low == doctest::Approx(0.0));
  CHECK(points[0].n_events == 60000);
  CHECK_FALSE(points[0].low_statistics);
  CHECK(points[0].mean_a_a == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // classical direct pairs carry half the maximally entangled concurrence
  CHECK(std::abs(points[0].c - 0.5) < 3.0 * points[0].sigma_c);
}

TEST_CASE("streaming scan matches the buffered helper") {
  GeometryConfig cfg;
  const auto scheme = events::default_binning_analytic(511.0, 1.0);
  RngStream rng(67, 0);
  std::vector<events::EventRecord> records;
  for (int i = 0; i < 4000; ++i) {
    auto rec = direct_record(static_cast<int>(rng.uniform() * 16) % 16,
                             static_cast<int>(rng.uniform() * 16) % 16);
    rec.de_pre_a = rng.uniform(15.0, 70.0);
    rec.e_main_a = 200.0;
    records.push_back(rec);
  }
  const double edges[3] = {0.1, 0.4, 0.7};
  const auto buffered = concurrence_by_theta_bins(records, edges, scheme, cfg,
                                                  FitMethod::direct, 511.0);
  ConcurrenceScan scan(edges, scheme, cfg, 511.0);
  for (const auto& rec : records) scan.add(rec);
  const auto streamed = scan.finish(FitMethod::direct);
  REQUIRE(buffered.size() == streamed.size());
  for (std::size_t i = 0; i < buffered.size(); ++i) {
    CHECK(buffered[i].c == doctest::Approx(streamed[i].c).epsilon(1e-14));
    CHECK(buffered[i].n_events == streamed[i].n_events);
  }
}
