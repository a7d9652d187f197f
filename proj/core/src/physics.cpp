#include "cpol/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpol/errors.hpp"

namespace cpol::physics {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double normalize_pol_angle(double angle) {
  double a = std::fmod(angle, M_PI);
  if (a < 0.0) a += M_PI;
  if (a >= M_PI) a -= M_PI;  // fmod rounding at the boundary
  return a;
}

double scattered_energy(double e_in, double theta, double me) {
  require(e_in > 0.0, "scattered_energy: e_in must be positive");
  require(theta >= 0.0 && theta <= M_PI, "scattered_energy: theta outside [0, pi]");
  return e_in / (1.0 + (e_in / me) * (1.0 - std::cos(theta)));
}

double gamma_factor(double e_in, double e_out, double me) {
  require(e_in > 0.0 && e_out > 0.0, "gamma_factor: energies must be positive");
  const double slack = 1e-9 * e_in;
  const double backscatter_min = e_in / (1.0 + 2.0 * e_in / me);
  require(e_out <= e_in + slack, "gamma_factor: e_out exceeds e_in");
  require(e_out >= backscatter_min - slack,
          "gamma_factor: e_out below the 180-degree backscatter minimum");
  return e_out / e_in + e_in / e_out;
}

ScatterKinematics make_kinematics(double e_in, double theta, double me) {
  ScatterKinematics k;
  k.e_in = e_in;
  k.theta = theta;
  k.e_out = scattered_energy(e_in, theta, me);
  k.gamma = k.e_out / e_in + e_in / k.e_out;
  return k;
}

double klein_nishina_weight(double e_in, double theta, double phi, const LinearPolarization& pol,
                            double me) {
  const ScatterKinematics k = make_kinematics(e_in, theta, me);
  const double s2 = 1.0 - std::cos(theta) * std::cos(theta);
  const double ratio = k.e_out / k.e_in;
  const double modulation = 1.0 + pol.degree * std::cos(2.0 * (phi - pol.angle));
  return ratio * ratio * (k.gamma - s2 * modulation);
}

double analyzing_power(double e_in, double theta, double me) {
  const ScatterKinematics k = make_kinematics(e_in, theta, me);
  const double c = std::cos(theta);
  const double s2 = 1.0 - c * c;
  return s2 / (k.gamma - s2);
}

double analyzing_power_from_energies(double e_in, double e_out, double me) {
  const double gamma = gamma_factor(e_in, e_out, me);
  double c = 1.0 + me / e_in - me / e_out;
  c = std::clamp(c, -1.0, 1.0);
  const double s2 = 1.0 - c * c;
  return s2 / (gamma - s2);
}

TransitionProbabilities transition_probabilities(double e_in, double theta, double me) {
  const ScatterKinematics k = make_kinematics(e_in, theta, me);
  const double c = std::cos(theta);
  const double s2 = 1.0 - c * c;
  TransitionProbabilities p;
  p.p_v_to_h = (k.gamma - 2.0) / (2.0 * k.gamma);
  p.p_h_to_v = (k.gamma - 2.0) / (2.0 * (k.gamma - s2));
  return p;
}

StokesLinear stokes_relative_to_plane(const LinearPolarization& pol, double plane_phi) {
  const double chi = pol.angle - plane_phi;  // polarization angle from the in-plane axis
  return {-pol.degree * std::cos(2.0 * chi), -pol.degree * std::sin(2.0 * chi)};
}

LinearPolarization polarization_from_stokes(const StokesLinear& s) {
  LinearPolarization pol;
  pol.degree = std::hypot(s.q, s.u);
  pol.angle = pol.degree > 0.0 ? normalize_pol_angle(0.5 * std::atan2(-s.u, -s.q)) : 0.0;
  return pol;
}

StokesTransfer stokes_compton_transfer(const StokesLinear& in, double theta, double gamma) {
  const double c = std::cos(theta);
  const double s2 = 1.0 - c * c;
  StokesTransfer t;
  t.intensity = (gamma - s2) + s2 * in.q;
  t.out.q = (s2 + (1.0 + c * c) * in.q) / t.intensity;
  t.out.u = 2.0 * c * in.u / t.intensity;
  return t;
}

LinearPolarization scatter_polarization(const LinearPolarization& pol_in, double theta, double phi,
                                        double e_in, double me) {
  const ScatterKinematics k = make_kinematics(e_in, theta, me);
  const StokesLinear in = stokes_relative_to_plane(pol_in, phi);
  const StokesTransfer t = stokes_compton_transfer(in, theta, k.gamma);
  return polarization_from_stokes(t.out);
}

double theta_from_energy_deposit(double delta_e, double e_in, double me) {
  require(delta_e >= 0.0, "theta_from_energy_deposit: negative deposit");
  const double max_dep = max_energy_deposit(e_in, me);
  if (delta_e > max_dep * (1.0 + 1e-12)) {
    throw std::invalid_argument("theta_from_energy_deposit: deposit above backscatter maximum");
  }
  const double e_out = e_in - std::min(delta_e, max_dep);
  double c = 1.0 + me / e_in - me / e_out;
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

double theta_from_energy_deposit(double delta_e) {
  return theta_from_energy_deposit(delta_e, electron_mass_kev, electron_mass_kev);
}

double deposit_from_theta(double theta, double e_in, double me) {
  return e_in - scattered_energy(e_in, theta, me);
}

double max_energy_deposit(double e_in, double me) {
  return 2.0 * e_in * e_in / (me + 2.0 * e_in);
}

double angle_resolution(double e_gagg) {
  require(e_gagg > 0.0, "angle_resolution: deposit must be positive");
  return 0.05 / std::sqrt(e_gagg / 30.0);
}

}  // namespace cpol::physics
