#include "cpol/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "cpol/quadrature.hpp"

namespace cpol {

void GeometryConfig::validate() const {
  if (counter_count < 4 || counter_count % 2 != 0) {
    throw std::invalid_argument("GeometryConfig: counter_count must be even and >= 4");
  }
  const double full = counter_count * counter_azimuth_step;
  if (std::abs(full - 2.0 * M_PI) > 1e-9) {
    throw std::invalid_argument("GeometryConfig: counter_count * azimuth_step must equal 360 deg");
  }
  if (prescatter_interaction_prob < 0.0 || prescatter_interaction_prob > 1.0) {
    throw std::invalid_argument("GeometryConfig: interaction probability outside [0, 1]");
  }
  if (mode == GeometryMode::realistic &&
      (main_accept_halfwidth <= 0.0 || main_accept_halfwidth >= M_PI / 2.0)) {
    throw std::invalid_argument("GeometryConfig: realistic mode needs a non-empty accept window");
  }
  if (prescatter_theta_window) {
    const auto& [lo, hi] = *prescatter_theta_window;
    if (lo < 0.0 || hi > M_PI || lo > hi) {
      throw std::invalid_argument("GeometryConfig: prescatter theta window outside [0, pi]");
    }
  }
}

double window_mean_analyzing_power(double e_kev, double theta_lo, double theta_hi) {
  const auto rate = [&](double theta) {
    const auto k = physics::make_kinematics(e_kev, theta);
    const double c = std::cos(theta);
    const double s2 = 1.0 - c * c;
    const double ratio = k.e_out / k.e_in;
    return ratio * ratio * (k.gamma - s2) * std::sin(theta);
  };
  const auto weighted = [&](double theta) {
    return rate(theta) * physics::analyzing_power(e_kev, theta);
  };
  const double denom = integrate(rate, theta_lo, theta_hi, 128);
  const double num = integrate(weighted, theta_lo, theta_hi, 128);
  return num / denom;
}

double tuned_main_accept_halfwidth(double target, double e_kev) {
  const double center = M_PI / 2.0;
  // The window mean decreases from A(90 deg) as the window widens past the
  // analyzing-power maximum; bracket and bisect.
  double lo = 1e-3;
  double hi = 0.6;  // about 34 degrees
  if (window_mean_analyzing_power(e_kev, center - hi, center + hi) > target) {
    throw std::invalid_argument("tuned_main_accept_halfwidth: target not reachable");
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double value = window_mean_analyzing_power(e_kev, center - mid, center + mid);
    (value > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GeometryConfig tuned_geometry(GeometryMode mode) {
  static const double halfwidth = tuned_main_accept_halfwidth();
  GeometryConfig cfg;
  cfg.mode = mode;
  cfg.main_accept_halfwidth = halfwidth;
  if (mode == GeometryMode::realistic) {
    cfg.prescatter_arm = PrescatterArm::random;
  }
  return cfg;
}

}  // namespace cpol
