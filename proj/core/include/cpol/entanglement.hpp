#pragma once

#include <utility>
#include <vector>

#include "cpol/physics.hpp"

namespace cpol::entanglement {

/// Entanglement measure of the two-photon state after one photon scattered by
/// theta: C = (1 + |cos theta|)^2 / (2 (gamma - sin^2 theta)).
/// Strictly positive for every angle; equals 1 at theta = 0.
double concurrence_qft(double e_in, double theta, double me = physics::electron_mass_kev);

/// Concurrence of the pure-state model built from the polarization transition
/// probabilities: C = |sqrt(P_HH P_VV) - sqrt(P_HV P_VH)|. Coincides with
/// concurrence_qft at theta = 0 and pi (both equal 2/gamma there) but deviates
/// at intermediate angles for energies near and below the electron mass.
double concurrence_pure_model(double e_in, double theta, double me = physics::electron_mass_kev);

/// Visibility of the azimuthal correlation for a maximally entangled pair:
/// the product of the two analyzing powers.
double visibility_entangled(double e_ai, double theta_a, double e_bi, double theta_b,
                            double me = physics::electron_mass_kev);

/// Classically correlated pairs (random but mutually orthogonal linear
/// polarizations) carry exactly half the entangled visibility.
double visibility_classical(double e_ai, double theta_a, double e_bi, double theta_b,
                            double me = physics::electron_mass_kev);

/// Coincidence integrals for classically correlated pairs over the relative
/// source polarization, for parallel and orthogonal scattering planes.
/// Closed forms: p_perp - p_par = 2 sin^2(ta) sin^2(tb) and
/// p_perp + p_par = 4 (gamma_a - sin^2 ta)(gamma_b - sin^2 tb).
struct ClassicalIntegrals {
  double p_perp = 0.0;
  double p_par = 0.0;
};

ClassicalIntegrals classical_integrals(double theta_a, double theta_b, double e_ai, double e_bi,
                                       double me = physics::electron_mass_kev);

/// Three-scattering configuration: photon "a" pre-scatters by theta, then both
/// photons scatter in their polarimeters by theta_a and theta_b. Energies are
/// chained through the Compton relation with both photons starting at e_in.
struct ThreeComptonConfig {
  double e_in = physics::electron_mass_kev;
  double theta = 0.0;
  double theta_a = 0.0;
  double theta_b = 0.0;
};

/// Angle-dependent factors of the three-scattering coincidence probability.
struct ThreeComptonTerms {
  double a_term = 0.0;  ///< product of the three diagonal matrix elements (gamma - sin^2)
  double b_term = 0.0;  ///< 2 sin^2(theta_b) sin^2(theta_a)
  double e_ai = 0.0;    ///< photon a energy entering the polarimeter
  double e_af = 0.0;
  double e_bf = 0.0;
};

ThreeComptonTerms three_compton_terms(const ThreeComptonConfig& cfg,
                                      double me = physics::electron_mass_kev);

/// Azimuthal part of the coincidence probability with sign knobs for the
/// oracle mutation checks; production code calls it with both signs at +1.
/// cos_sign scales the cos(theta) cross term of the angular correlation,
/// dterm_sign the sin^2(theta)/2 correction term.
double three_compton_probability_signed(const ThreeComptonConfig& cfg, double phi_a, double phi_b,
                                        double cos_sign, double dterm_sign,
                                        double me = physics::electron_mass_kev);

/// Coincidence probability P(phi_b, phi_a) for the pre-scattered entangled
/// pair, up to angle-independent factors. Terms linear in cos 2phi are
/// omitted; they integrate to zero in the correlation function, so this
/// expression is meant for computing R(phi) and visibilities, not as a
/// standalone differential cross section.
double three_compton_probability(const ThreeComptonConfig& cfg, double phi_a, double phi_b,
                                 double me = physics::electron_mass_kev);

enum class AzimuthConvention {
  forward,   ///< phi = phi_a + phi_b, for pre-scattering into the forward hemisphere
  backward,  ///< phi = phi_b - phi_a, orientation-preserving for backscattering
};

/// Convention matching the hemisphere of cfg.theta.
AzimuthConvention convention_for(const ThreeComptonConfig& cfg);

/// Correlation function R(phi) = (1/pi) Int_0^pi P dphi_b, by fixed-order
/// Gauss-Legendre quadrature with a doubling convergence check.
double correlation_r(const ThreeComptonConfig& cfg, double phi, AzimuthConvention dir,
                     double me = physics::electron_mass_kev);

/// Closed-form visibility of R(phi):
/// nu = B/(2A) [1 + |cos theta| - sin^2(theta)/2].
double visibility_closed_form(const ThreeComptonConfig& cfg,
                              double me = physics::electron_mass_kev);

/// Visibility extracted from the quadrature R(phi) by projecting onto
/// cos 2phi over 64 equally spaced azimuths (hemisphere-matched convention).
double visibility_from_quadrature(const ThreeComptonConfig& cfg,
                                  double me = physics::electron_mass_kev);

/// Factorized prediction concurrence_qft(e_in, theta) * A_a * A_b with the
/// analyzing powers evaluated at the chained energies.
double visibility_factorized(const ThreeComptonConfig& cfg,
                             double me = physics::electron_mass_kev);

/// |visibility_from_quadrature - visibility_factorized| for one configuration.
double factorization_residual(const ThreeComptonConfig& cfg,
                              double me = physics::electron_mass_kev);

/// CHSH S-function value S(phi) = nu (cos 6phi - 3 cos 2phi).
double chsh_s_curve(double phi, double nu);

/// Theory curve sample: (theta, concurrence).
struct ConcurrenceCurve {
  double e_in = 0.0;
  std::vector<std::pair<double, double>> samples;
};

/// Sample concurrence_qft on a uniform theta grid over [0, pi].
ConcurrenceCurve concurrence_curve_qft(double e_in, int n_samples,
                                       double me = physics::electron_mass_kev);

}  // namespace cpol::entanglement
