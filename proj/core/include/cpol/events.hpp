#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpol/geometry.hpp"
#include "cpol/physics.hpp"

namespace cpol::events {

/// Generator-side truth, never consulted by classification.
struct EventTruth {
  double prescatter_theta = 0.0;
  double prescatter_phi = 0.0;
  char which_arm = 'a';  ///< 'a', 'b', or 'x' when both pre-scatterers fired
};

/// One recorded photon-pair event: measured quantities only, plus optional
/// truth metadata carried alongside for validation studies.
struct EventRecord {
  std::uint64_t event_id = 0;
  double de_pre_a = 0.0;  ///< pre-scatterer deposit, 0 if no interaction
  double de_pre_b = 0.0;
  double e_main_a = 0.0;  ///< main-scatterer recoil deposit
  double e_main_b = 0.0;
  int counter_a = 0;      ///< triggered ring counter, [0, counter_count)
  int counter_b = 0;
  double e_counter_a = 0.0;  ///< photon-counter deposit
  double e_counter_b = 0.0;
  bool lost = false;  ///< geometric miss: no trigger, kept for efficiency accounting
  std::optional<EventTruth> truth;
};

enum class EventTag { direct, pre_scattered, backscatter, rejected };

struct EventClass {
  EventTag tag = EventTag::rejected;
  int bin = -1;  ///< forward bin index for pre_scattered, -1 otherwise
  std::optional<double> reconstructed_theta;
};

/// Classification scheme: noise threshold on the pre-scatterer deposit,
/// forward bin edges in theta (ascending, 6 edges for 5 bins ending at the
/// forward limit), and the backscatter window.
struct BinningScheme {
  double noise_threshold_kev = 10.0;
  std::array<double, 6> forward_edges{};  ///< radians
  double backscatter_lo = 160.0 * M_PI / 180.0;
  double backscatter_hi = M_PI;
};

inline constexpr double forward_theta_limit = 35.0 * M_PI / 180.0;

/// Classify a record from measured deposits alone. Deposits below the noise
/// threshold in both arms give direct; exactly one arm above reconstructs the
/// pre-scattering angle from the deposit and lands in a forward bin, the
/// backscatter window, or rejected in between; everything pathological
/// (both arms fired, lost events, deposits beyond the kinematic maximum)
/// is rejected.
EventClass classify(const EventRecord& rec, const BinningScheme& scheme,
                    double source_energy_kev = physics::electron_mass_kev);

/// Azimuthal angle between the triggered counters, folded to [0, pi].
/// The counter indexing fixes the orientation, so the same fold applies to
/// forward and backscatter events. Throws on rejected input.
double azimuthal_angle(const EventRecord& rec, const EventClass& cls, int counter_count,
                       double counter_azimuth_step);

double azimuthal_angle(const EventRecord& rec, const EventClass& cls, const GeometryConfig& cfg);

/// Forward-bin edges as quantiles of a measured theta sample restricted to
/// (threshold angle, forward limit]. Throws AnalysisError on an empty sample.
BinningScheme default_binning(std::span<const double> theta_sample,
                              double noise_threshold_kev = 10.0,
                              double source_energy_kev = physics::electron_mass_kev);

/// Forward-bin edges as quantiles of the analytic Compton angular
/// distribution at the source energy.
BinningScheme default_binning_analytic(double source_energy_kev = physics::electron_mass_kev,
                                       double noise_threshold_kev = 10.0);

}  // namespace cpol::events
