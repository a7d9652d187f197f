#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "cpol/physics.hpp"

namespace cpol {

/// Back-to-back pair source: photon b along -z with a uniformly random linear
/// polarization azimuth, photon a along +z polarized orthogonally.
struct SourceConfig {
  double photon_energy_kev = physics::electron_mass_kev;
  std::uint64_t pair_count = 0;
  std::uint64_t seed = 1;
};

enum class GeometryMode { ideal, realistic };

enum class PrescatterArm { none, a, b, random };

/// Two-arm polarimeter model. Transverse geometry is parameterized rather
/// than ray traced: the main scatterer accepts a polar-angle window and the
/// scattered photon is binned into one of counter_count ring sectors by
/// azimuth. Ideal mode ignores the acceptance window and all resolutions.
struct GeometryConfig {
  GeometryMode mode = GeometryMode::ideal;
  /// Which pre-scatterer is present. `random` activates both, each
  /// interacting independently at the configured probability, so simultaneous
  /// double interactions occur and are rejected downstream.
  PrescatterArm prescatter_arm = PrescatterArm::none;
  double prescatter_interaction_prob = 0.3;
  /// When set, restricts the sampled pre-scattering polar angle to
  /// [first, second] radians; a zero-width window forces that exact angle.
  std::optional<std::pair<double, double>> prescatter_theta_window;
  int counter_count = 16;
  double counter_azimuth_step = 2.0 * M_PI / 16.0;
  double main_accept_center = M_PI / 2.0;
  double main_accept_halfwidth = 0.0;  ///< defaulted by tuned_geometry()
  double gagg_resolution_coeff = 0.05;
  double nai_resolution_at_511 = 0.10;

  void validate() const;
};

/// Mean analyzing power of a polarimeter restricted to a polar window,
/// weighted by the azimuth-averaged Compton rate. This is the quantity the
/// acceptance window is tuned against.
double window_mean_analyzing_power(double e_kev, double theta_lo, double theta_hi);

/// Half-width of the 90-degree acceptance window such that the window-mean
/// analyzing power at e_kev equals target; solved by bisection.
double tuned_main_accept_halfwidth(double target = 0.661,
                                   double e_kev = physics::electron_mass_kev);

/// Geometry defaults with the tuned realistic acceptance window.
GeometryConfig tuned_geometry(GeometryMode mode = GeometryMode::ideal);

}  // namespace cpol
