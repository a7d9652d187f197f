#include "cpol/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpol/errors.hpp"
#include "cpol/quadrature.hpp"

namespace cpol::events {

namespace {

int forward_bin_index(double theta, const BinningScheme& scheme) {
  if (theta < scheme.forward_edges.front() || theta > scheme.forward_edges.back()) return -1;
  for (int i = 0; i < 5; ++i) {
    if (theta <= scheme.forward_edges[i + 1]) return i;
  }
  return 4;
}

}  // namespace

EventClass classify(const EventRecord& rec, const BinningScheme& scheme,
                    double source_energy_kev) {
  EventClass cls;
  if (rec.lost) return cls;  // rejected

  const bool hit_a = rec.de_pre_a > scheme.noise_threshold_kev;
  const bool hit_b = rec.de_pre_b > scheme.noise_threshold_kev;
  if (hit_a && hit_b) return cls;
  if (!hit_a && !hit_b) {
    cls.tag = EventTag::direct;
    return cls;
  }

  const double de = hit_a ? rec.de_pre_a : rec.de_pre_b;
  double theta = 0.0;
  try {
    theta = physics::theta_from_energy_deposit(de, source_energy_kev);
  } catch (const std::invalid_argument&) {
    return cls;  // deposit beyond the kinematic maximum
  }
  cls.reconstructed_theta = theta;

  const int bin = forward_bin_index(theta, scheme);
  if (bin >= 0) {
    cls.tag = EventTag::pre_scattered;
    cls.bin = bin;
    return cls;
  }
  if (theta > scheme.backscatter_lo && theta <= scheme.backscatter_hi) {
    cls.tag = EventTag::backscatter;
    return cls;
  }
  return cls;  // the gap between the forward limit and the backscatter window
}

double azimuthal_angle(const EventRecord& rec, const EventClass& cls, int counter_count,
                       double counter_azimuth_step) {
  if (cls.tag == EventTag::rejected) {
    throw std::invalid_argument("azimuthal_angle: rejected events carry no counter pair");
  }
  int k = (rec.counter_b - rec.counter_a) % counter_count;
  if (k < 0) k += counter_count;
  if (k > counter_count / 2) k = counter_count - k;
  return k * counter_azimuth_step;
}

double azimuthal_angle(const EventRecord& rec, const EventClass& cls, const GeometryConfig& cfg) {
  return azimuthal_angle(rec, cls, cfg.counter_count, cfg.counter_azimuth_step);
}

namespace {

/// Reconstructed angle of the noise threshold; rejects thresholds that leave
/// no taggable forward range at this source energy.
double threshold_angle(double noise_threshold_kev, double source_energy_kev) {
  const double limit_deposit =
      physics::deposit_from_theta(forward_theta_limit, source_energy_kev);
  if (noise_threshold_kev >= limit_deposit) {
    throw AnalysisError(
        "noise threshold exceeds the largest forward-range deposit at this source energy");
  }
  return physics::theta_from_energy_deposit(noise_threshold_kev, source_energy_kev);
}

}  // namespace

BinningScheme default_binning(std::span<const double> theta_sample, double noise_threshold_kev,
                              double source_energy_kev) {
  BinningScheme scheme;
  scheme.noise_threshold_kev = noise_threshold_kev;
  const double theta_min = threshold_angle(noise_threshold_kev, source_energy_kev);

  std::vector<double> in_range;
  in_range.reserve(theta_sample.size());
  for (double t : theta_sample) {
    if (t > theta_min && t <= forward_theta_limit) in_range.push_back(t);
  }
  if (in_range.empty()) {
    throw AnalysisError("default_binning: no sample values in the forward range");
  }
  std::sort(in_range.begin(), in_range.end());

  scheme.forward_edges[0] = theta_min;
  scheme.forward_edges[5] = forward_theta_limit;
  for (int i = 1; i < 5; ++i) {
    const double q = static_cast<double>(i) / 5.0;
    const double pos = q * (in_range.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - lo;
    const double value = lo + 1 < in_range.size()
                             ? in_range[lo] * (1.0 - frac) + in_range[lo + 1] * frac
                             : in_range[lo];
    scheme.forward_edges[i] = value;
  }
  return scheme;
}

BinningScheme default_binning_analytic(double source_energy_kev, double noise_threshold_kev) {
  BinningScheme scheme;
  scheme.noise_threshold_kev = noise_threshold_kev;
  const double theta_min = threshold_angle(noise_threshold_kev, source_energy_kev);

  const auto rate = [&](double theta) {
    const auto k = physics::make_kinematics(source_energy_kev, theta);
    const double c = std::cos(theta);
    const double ratio = k.e_out / k.e_in;
    return ratio * ratio * (k.gamma - (1.0 - c * c)) * std::sin(theta);
  };
  const double total = integrate(rate, theta_min, forward_theta_limit, 256);

  scheme.forward_edges[0] = theta_min;
  scheme.forward_edges[5] = forward_theta_limit;
  for (int i = 1; i < 5; ++i) {
    const double target = total * static_cast<double>(i) / 5.0;
    double lo = theta_min;
    double hi = forward_theta_limit;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (integrate(rate, theta_min, mid, 128) < target ? lo : hi) = mid;
    }
    scheme.forward_edges[i] = 0.5 * (lo + hi);
  }
  return scheme;
}

}  // namespace cpol::events
