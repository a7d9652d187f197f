#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpol/events.hpp"
#include "cpol/geometry.hpp"

namespace cpol::analysis {

/// Azimuthal-correlation histogram over the folded counter angles
/// (0, step, ..., 180 degrees; 9 bins for a 16-counter ring).
///
/// exposure carries the per-bin number of counter pairs mapping onto each
/// folded angle (the end bins have half the combinations), and attenuation is
/// the cos 2phi damping from quantizing both photon azimuths into sectors.
/// Fits divide the modulation by these, so visibilities are unbiased.
struct AngleHistogram {
  std::vector<double> bin_centers;  ///< radians
  std::vector<double> counts;
  std::vector<double> exposure;
  double attenuation = 1.0;
  events::EventTag event_class = events::EventTag::direct;

  std::size_t n_bins() const { return bin_centers.size(); }
};

/// Histogram skeleton for a counter geometry: zero counts, pair-multiplicity
/// exposure, sector-quantization attenuation.
AngleHistogram make_histogram(const GeometryConfig& cfg);

/// Histogram with unit exposure and no attenuation, for synthetic inputs that
/// sample the modulation at the bin centers directly.
AngleHistogram make_synthetic_histogram(std::span<const double> counts, int counter_count = 16);

/// Event selection: class tag, with an optional forward-bin restriction.
struct ClassFilter {
  events::EventTag tag = events::EventTag::direct;
  int bin = -1;  ///< restrict to one forward bin when >= 0
};

/// Accumulate the folded counter-angle histogram over classified events.
AngleHistogram histogram_events(std::span<const events::EventRecord> records,
                                const ClassFilter& filter, const events::BinningScheme& scheme,
                                const GeometryConfig& cfg,
                                double source_energy_kev = physics::electron_mass_kev);

enum class FitMethod { direct, chsh };

/// Visibility fit result.
struct FitResult {
  double nu = 0.0;
  double sigma_nu = 0.0;
  double p0 = 0.0;
  double chi2_ndf = 0.0;
  FitMethod method = FitMethod::direct;
};

/// Weighted least-squares fit of counts = P0 (1 - nu cos 2phi) with Poisson
/// weights (variance = max(count, 1)). Requires >= 3 populated bins.
FitResult fit_direct(const AngleHistogram& hist);

/// S-function samples built from normalized counts: S(phi) = 3 N(phi) - N(3 phi) - 2.
struct SCurve {
  std::vector<double> phi;
  std::vector<double> s;
  std::vector<double> sigma;  ///< per-point error of the phi bin's normalized count
  double attenuation = 1.0;
};

SCurve build_s_function(const AngleHistogram& hist);

/// One-parameter fit of the S samples to nu (cos 6phi - 3 cos 2phi).
///
/// The reported sigma follows the per-point convention of the S construction
/// (each sample weighted by its own bin's count error); because the S samples
/// reuse counts across bins, this is an optimistic estimate, roughly a factor
/// three below the direct fit. chsh_sigma_correlated propagates the shared
/// fluctuations exactly for calibration studies.
FitResult fit_chsh(const SCurve& curve);
FitResult fit_chsh(const AngleHistogram& hist);

/// Standard deviation of the CHSH visibility estimator with the bin-sharing
/// covariance of the S samples accounted for.
double chsh_sigma_correlated(const AngleHistogram& hist);

/// Simple contrast estimator (N(90) - N(0)) / (N(90) + N(0)) on the
/// exposure-normalized, attenuation-corrected histogram.
double ratio_visibility(const AngleHistogram& hist);

/// Arm selector after relabeling: "scattered" is the arm whose pre-scatterer
/// fired (arm a for direct events), "partner" the other one.
enum class Arm { scattered, partner };

struct MeanAnalyzingPower {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t n_events = 0;
};

/// Mean analyzing power over the selected events, computed per event from the
/// measured energies: E_in is the source energy minus the pre-scatter deposit
/// (for the scattered arm) and E_out = E_in - e_main. Throws AnalysisError on
/// an empty selection.
MeanAnalyzingPower mean_analyzing_power(std::span<const events::EventRecord> records, Arm arm,
                                        const ClassFilter& filter,
                                        const events::BinningScheme& scheme,
                                        double source_energy_kev = physics::electron_mass_kev);

/// Concurrence extracted for one theta bin.
struct ConcurrencePoint {
  double theta_low = 0.0;   ///< radians
  double theta_high = 0.0;
  double theta_mean = 0.0;  ///< count-weighted mean reconstructed angle
  double c = 0.0;
  double sigma_c = 0.0;
  double mean_a_a = 0.0;
  double mean_a_b = 0.0;
  FitResult nu;
  std::size_t n_events = 0;
  bool low_statistics = false;  ///< fewer than 100 events in the bin
};

/// c = nu / (a_a a_b) with the analyzing-power uncertainties folded into
/// sigma_c in quadrature. Throws AnalysisError when a_a * a_b < 1e-6.
ConcurrencePoint extract_concurrence(const FitResult& fit, double a_a, double a_b,
                                     double sigma_a_a = 0.0, double sigma_a_b = 0.0);

/// Full concurrence curve over the classification layout: one direct point at
/// theta = 0, one per forward bin, one backscatter point. Classes with no
/// events are omitted.
std::vector<ConcurrencePoint> concurrence_curve(std::span<const events::EventRecord> records,
                                                const events::BinningScheme& scheme,
                                                const GeometryConfig& cfg, FitMethod method,
                                                double source_energy_kev =
                                                    physics::electron_mass_kev);

/// Concurrence points over explicit reconstructed-theta bin edges, for
/// scanning the full angular range outside the fixed classification layout.
std::vector<ConcurrencePoint> concurrence_by_theta_bins(
    std::span<const events::EventRecord> records, std::span<const double> bin_edges,
    const events::BinningScheme& scheme, const GeometryConfig& cfg, FitMethod method,
    double source_energy_kev = physics::electron_mass_kev);

/// Streaming accumulator behind concurrence_by_theta_bins, for event volumes
/// that should not be buffered. Feed records as they are produced, then fit.
class ConcurrenceScan {
 public:
  ConcurrenceScan(std::span<const double> bin_edges, events::BinningScheme scheme,
                  GeometryConfig cfg, double source_energy_kev = physics::electron_mass_kev);
  ~ConcurrenceScan();
  ConcurrenceScan(ConcurrenceScan&&) noexcept;
  ConcurrenceScan& operator=(ConcurrenceScan&&) noexcept;

  void add(const events::EventRecord& rec);
  std::vector<ConcurrencePoint> finish(FitMethod method) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cpol::analysis
