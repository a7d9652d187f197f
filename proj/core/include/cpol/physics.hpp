#pragma once

#include "cpol/vec3.hpp"

namespace cpol::physics {

/// Electron mass in keV. Single authoritative constant; the 511 keV
/// annihilation-photon convention is used instead of the CODATA value so that
/// tabulated reference numbers come out exact.
inline constexpr double electron_mass_kev = 511.0;

/// Linear polarization descriptor: plane azimuth about the propagation axis
/// (mod pi, measured from the transverse basis axis e1 toward e2) and degree
/// of polarization in [0, 1]. Circular polarization is not tracked; the
/// sources modelled here have none and the scattering analysis only couples
/// linear components.
struct LinearPolarization {
  double angle = 0.0;   ///< radians in [0, pi)
  double degree = 0.0;  ///< in [0, 1]
};

/// Normalize an angle to [0, pi).
double normalize_pol_angle(double angle);

/// A photon in flight. The polarization angle is defined in the right-handed
/// transverse basis (basis_e1, basis_e2, direction) with basis_e2 implied.
struct PhotonState {
  double energy_kev = 0.0;
  Vec3 direction{0.0, 0.0, 1.0};
  Vec3 basis_e1{1.0, 0.0, 0.0};
  LinearPolarization polarization;

  Vec3 basis_e2() const { return cross(direction, basis_e1); }
};

/// Kinematics of one Compton scattering: energies, polar angle and the
/// gamma = E_f/E_i + E_i/E_f invariant (>= 2, equality at theta = 0).
struct ScatterKinematics {
  double e_in = 0.0;
  double e_out = 0.0;
  double theta = 0.0;
  double gamma = 2.0;
};

/// Probabilities for the linear-polarization flip of the scattered photon,
/// with "V" the plane-normal direction and "H" the in-plane direction.
struct TransitionProbabilities {
  double p_v_to_h = 0.0;
  double p_h_to_v = 0.0;
};

/// Scattered photon energy E_f for incident energy e_in at polar angle theta.
double scattered_energy(double e_in, double theta, double me = electron_mass_kev);

/// gamma = e_out/e_in + e_in/e_out. Rejects kinematically impossible pairs
/// (e_out above e_in or below the 180-degree backscatter minimum).
double gamma_factor(double e_in, double e_out, double me = electron_mass_kev);

/// Kinematics bundle for scattering of e_in at theta.
ScatterKinematics make_kinematics(double e_in, double theta, double me = electron_mass_kev);

/// Unnormalized Compton weight for scattering at (theta, phi), where phi is
/// the azimuth of the scattering plane in the photon's transverse basis.
/// w = (E_f/E_i)^2 (gamma - sin^2(theta) (1 + P cos 2(phi - pol.angle))).
/// The constant r_e^2/2 is dropped by module convention: every consumer uses
/// ratios or normalized samplers. The partial-polarization form reduces to
/// the fully polarized cross section at P = 1 and to the unpolarized one at
/// P = 0. Bounded by 2 for any energy and angle.
double klein_nishina_weight(double e_in, double theta, double phi, const LinearPolarization& pol,
                            double me = electron_mass_kev);

/// Polarimeter analyzing power A = sin^2(theta) / (gamma - sin^2(theta)).
double analyzing_power(double e_in, double theta, double me = electron_mass_kev);

/// Analyzing power from a measured (e_in, e_out) pair, inverting the
/// kinematic relation for theta.
double analyzing_power_from_energies(double e_in, double e_out, double me = electron_mass_kev);

/// P(V->H) = (gamma-2)/(2 gamma), P(H->V) = (gamma-2)/(2(gamma - sin^2 theta)).
TransitionProbabilities transition_probabilities(double e_in, double theta,
                                                 double me = electron_mass_kev);

/// Linear Stokes components relative to a scattering plane: q = +1 means
/// fully polarized along the plane normal ("V"), q = -1 in the plane ("H").
struct StokesLinear {
  double q = 0.0;
  double u = 0.0;
};

/// Stokes components of a polarization state measured against a plane whose
/// in-plane transverse axis sits at azimuth plane_phi in the same basis.
StokesLinear stokes_relative_to_plane(const LinearPolarization& pol, double plane_phi);

/// Inverse of stokes_relative_to_plane for the plane at azimuth zero.
LinearPolarization polarization_from_stokes(const StokesLinear& s);

/// Result of pushing a Stokes vector through one Compton scattering.
struct StokesTransfer {
  double intensity = 0.0;  ///< relative scattered intensity (Klein-Nishina weight shape)
  StokesLinear out;        ///< normalized Stokes of the scattered photon
};

/// Fano-McMaster polarization transfer for Compton scattering, written in the
/// scattering-plane basis shared by the incident and scattered photon:
///   I' = (gamma - sin^2 t) + sin^2 t q,
///   q' = (sin^2 t + (1 + cos^2 t) q) / I',
///   u' = 2 cos t u / I'.
/// For unpolarized input the outgoing degree equals the analyzing power; for
/// "V" input the in-plane analyzer marginal is (gamma-2)/(2 gamma).
StokesTransfer stokes_compton_transfer(const StokesLinear& in, double theta, double gamma);

/// Polarization of the scattered photon, expressed in the outgoing transverse
/// basis (in-plane axis first, plane normal second), for an incident
/// polarization whose angle is measured in a basis where the scattering plane
/// sits at azimuth phi.
LinearPolarization scatter_polarization(const LinearPolarization& pol_in, double theta, double phi,
                                        double e_in, double me = electron_mass_kev);

/// Pre-scattering angle reconstructed from the energy deposit of the first
/// scattering: cos(theta) = 1 + me/e_in - me/(e_in - delta_e).
/// Throws on deposits above the backscatter maximum.
double theta_from_energy_deposit(double delta_e, double e_in, double me = electron_mass_kev);

/// Annihilation-photon case (e_in = me): cos(theta) = (me - 2 dE)/(me - dE).
double theta_from_energy_deposit(double delta_e);

/// Energy deposit of scattering e_in by theta (inverse of the above).
double deposit_from_theta(double theta, double e_in, double me = electron_mass_kev);

/// Largest possible single-scattering deposit, reached at 180 degrees.
double max_energy_deposit(double e_in, double me = electron_mass_kev);

/// Relative angular resolution of the pre-scatter angle reconstruction for a
/// deposit e_gagg in the intermediate scatterer: 0.05 / sqrt(e_gagg / 30 keV).
double angle_resolution(double e_gagg);

}  // namespace cpol::physics
