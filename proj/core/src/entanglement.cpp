#include "cpol/entanglement.hpp"

#include <cmath>
#include <stdexcept>

#include "cpol/quadrature.hpp"

namespace cpol::entanglement {

using physics::make_kinematics;
using physics::scattered_energy;

namespace {

constexpr int kQuadratureNodes = 256;   // per pi interval
constexpr int kProjectionAngles = 64;   // azimuths for the cos 2phi projection

double sin2(double theta) {
  const double c = std::cos(theta);
  return 1.0 - c * c;
}

}  // namespace

double concurrence_qft(double e_in, double theta, double me) {
  const auto k = make_kinematics(e_in, theta, me);
  const double abs_c = std::abs(std::cos(theta));
  return (1.0 + abs_c) * (1.0 + abs_c) / (2.0 * (k.gamma - sin2(theta)));
}

double concurrence_pure_model(double e_in, double theta, double me) {
  const auto p = physics::transition_probabilities(e_in, theta, me);
  const double p_hh = 1.0 - p.p_h_to_v;
  const double p_vv = 1.0 - p.p_v_to_h;
  return std::abs(std::sqrt(p_hh * p_vv) - std::sqrt(p.p_h_to_v * p.p_v_to_h));
}

double visibility_entangled(double e_ai, double theta_a, double e_bi, double theta_b, double me) {
  return physics::analyzing_power(e_ai, theta_a, me) * physics::analyzing_power(e_bi, theta_b, me);
}

double visibility_classical(double e_ai, double theta_a, double e_bi, double theta_b, double me) {
  return 0.5 * visibility_entangled(e_ai, theta_a, e_bi, theta_b, me);
}

ClassicalIntegrals classical_integrals(double theta_a, double theta_b, double e_ai, double e_bi,
                                       double me) {
  const auto ka = make_kinematics(e_ai, theta_a, me);
  const auto kb = make_kinematics(e_bi, theta_b, me);
  const double s2a = sin2(theta_a);
  const double s2b = sin2(theta_b);

  const auto weight_a = [&](double phi) {
    const double c = std::cos(phi);
    return ka.gamma - 2.0 * s2a * c * c;
  };
  ClassicalIntegrals result;
  // (1/pi) Int_0^2pi w_a(phi) w_b(phi +- 90deg) dphi, split at pi for the rule.
  const auto integrand_perp = [&](double phi) {
    const double c = std::cos(phi);
    return weight_a(phi) * (kb.gamma - 2.0 * s2b * c * c);
  };
  const auto integrand_par = [&](double phi) {
    const double s = std::sin(phi);
    return weight_a(phi) * (kb.gamma - 2.0 * s2b * s * s);
  };
  result.p_perp = (integrate(integrand_perp, 0.0, M_PI, kQuadratureNodes) +
                   integrate(integrand_perp, M_PI, 2.0 * M_PI, kQuadratureNodes)) /
                  M_PI;
  result.p_par = (integrate(integrand_par, 0.0, M_PI, kQuadratureNodes) +
                  integrate(integrand_par, M_PI, 2.0 * M_PI, kQuadratureNodes)) /
                 M_PI;
  return result;
}

ThreeComptonTerms three_compton_terms(const ThreeComptonConfig& cfg, double me) {
  ThreeComptonTerms t;
  const auto k_pre = make_kinematics(cfg.e_in, cfg.theta, me);
  t.e_ai = k_pre.e_out;
  const auto k_a = make_kinematics(t.e_ai, cfg.theta_a, me);
  t.e_af = k_a.e_out;
  const auto k_b = make_kinematics(cfg.e_in, cfg.theta_b, me);
  t.e_bf = k_b.e_out;

  const double t11_b = k_b.gamma - sin2(cfg.theta_b);
  const double t11_mid = k_pre.gamma - sin2(cfg.theta);
  const double t11_a = k_a.gamma - sin2(cfg.theta_a);
  t.a_term = t11_b * t11_mid * t11_a;
  t.b_term = 2.0 * sin2(cfg.theta_b) * sin2(cfg.theta_a);
  return t;
}

double three_compton_probability_signed(const ThreeComptonConfig& cfg, double phi_a, double phi_b,
                                        double cos_sign, double dterm_sign, double me) {
  const ThreeComptonTerms t = three_compton_terms(cfg, me);
  const double c_theta = std::cos(cfg.theta);
  const double angular = std::cos(2.0 * phi_b) * std::cos(2.0 * phi_a) -
                         cos_sign * c_theta * std::sin(2.0 * phi_b) * std::sin(2.0 * phi_a);
  const double d_term = dterm_sign * 0.5 * t.b_term * sin2(cfg.theta) * std::cos(2.0 * phi_b) *
                        std::cos(2.0 * phi_a);
  return t.a_term - t.b_term * angular + d_term;
}

double three_compton_probability(const ThreeComptonConfig& cfg, double phi_a, double phi_b,
                                 double me) {
  return three_compton_probability_signed(cfg, phi_a, phi_b, 1.0, 1.0, me);
}

AzimuthConvention convention_for(const ThreeComptonConfig& cfg) {
  return std::cos(cfg.theta) >= 0.0 ? AzimuthConvention::forward : AzimuthConvention::backward;
}

double correlation_r(const ThreeComptonConfig& cfg, double phi, AzimuthConvention dir, double me) {
  const auto integrand = [&](double phi_b) {
    const double phi_a = dir == AzimuthConvention::forward ? phi - phi_b : phi_b - phi;
    return three_compton_probability(cfg, phi_a, phi_b, me);
  };
  const auto result = integrate_checked(integrand, 0.0, M_PI, kQuadratureNodes, 1e-10);
  return result.value / M_PI;
}

double visibility_closed_form(const ThreeComptonConfig& cfg, double me) {
  const ThreeComptonTerms t = three_compton_terms(cfg, me);
  const double abs_c = std::abs(std::cos(cfg.theta));
  return t.b_term / (2.0 * t.a_term) * (1.0 + abs_c - 0.5 * sin2(cfg.theta));
}

double visibility_from_quadrature(const ThreeComptonConfig& cfg, double me) {
  const AzimuthConvention dir = convention_for(cfg);
  // R(phi) = P0 (1 - nu cos 2phi); project onto cos 2phi with the discrete
  // orthogonality of equally spaced azimuths over one period.
  double mean = 0.0;
  double amp = 0.0;
  for (int i = 0; i < kProjectionAngles; ++i) {
    const double phi = M_PI * static_cast<double>(i) / kProjectionAngles;
    const double r = correlation_r(cfg, phi, dir, me);
    mean += r;
    amp += r * std::cos(2.0 * phi);
  }
  mean /= kProjectionAngles;
  amp *= 2.0 / kProjectionAngles;
  return -amp / mean;
}

double visibility_factorized(const ThreeComptonConfig& cfg, double me) {
  const ThreeComptonTerms t = three_compton_terms(cfg, me);
  const double a_a = physics::analyzing_power(t.e_ai, cfg.theta_a, me);
  const double a_b = physics::analyzing_power(cfg.e_in, cfg.theta_b, me);
  return concurrence_qft(cfg.e_in, cfg.theta, me) * a_a * a_b;
}

double factorization_residual(const ThreeComptonConfig& cfg, double me) {
  return std::abs(visibility_from_quadrature(cfg, me) - visibility_factorized(cfg, me));
}

double chsh_s_curve(double phi, double nu) {
  return nu * (std::cos(6.0 * phi) - 3.0 * std::cos(2.0 * phi));
}

ConcurrenceCurve concurrence_curve_qft(double e_in, int n_samples, double me) {
  if (n_samples < 2) throw std::invalid_argument("concurrence_curve_qft: need >= 2 samples");
  ConcurrenceCurve curve;
  curve.e_in = e_in;
  curve.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double theta = M_PI * static_cast<double>(i) / (n_samples - 1);
    curve.samples.emplace_back(theta, concurrence_qft(e_in, theta, me));
  }
  return curve;
}

}  // namespace cpol::entanglement
