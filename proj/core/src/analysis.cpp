#include "cpol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpol/errors.hpp"

namespace cpol::analysis {

using events::EventClass;
using events::EventRecord;
using events::EventTag;

namespace {

int fold_counter_difference(int counter_a, int counter_b, int n) {
  int k = (counter_b - counter_a) % n;
  if (k < 0) k += n;
  if (k > n / 2) k = n - k;
  return k;
}

/// Arm whose pre-scatterer fired; 'a' for direct events, 'x' when both did.
char scattered_arm_of(const EventRecord& rec, const events::BinningScheme& scheme) {
  const bool hit_a = rec.de_pre_a > scheme.noise_threshold_kev;
  const bool hit_b = rec.de_pre_b > scheme.noise_threshold_kev;
  if (hit_a && hit_b) return 'x';
  if (hit_b) return 'b';
  return 'a';
}

/// Analyzing power of one arm from measured energies; nullopt when the
/// smeared energies fall outside the kinematic range.
std::optional<double> event_analyzing_power(const EventRecord& rec, char scattered_arm, Arm which,
                                            const events::BinningScheme& scheme,
                                            double source_energy_kev) {
  char arm = 0;
  if (scattered_arm == 'x') return std::nullopt;
  if (which == Arm::scattered) {
    arm = scattered_arm;
  } else {
    arm = scattered_arm == 'a' ? 'b' : 'a';
  }
  const double de_pre = arm == 'a' ? rec.de_pre_a : rec.de_pre_b;
  const double e_main = arm == 'a' ? rec.e_main_a : rec.e_main_b;
  const bool prescattered = de_pre > scheme.noise_threshold_kev;
  const double e_in = source_energy_kev - (prescattered ? de_pre : 0.0);
  const double e_out = e_in - e_main;
  if (!(e_in > 0.0) || !(e_out > 0.0)) return std::nullopt;
  try {
    return physics::analyzing_power_from_energies(e_in, e_out);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }

  MeanAnalyzingPower finish() const {
    if (n == 0) throw AnalysisError("mean_analyzing_power: empty selection");
    MeanAnalyzingPower out;
    out.mean = sum / n;
    out.n_events = n;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
      out.stderr_mean = std::sqrt(var / n);
    }
    return out;
  }
};

FitResult fit_from_parts(double nu_eff, double var_eff, double p0, double chi2, int ndf,
                         double attenuation, FitMethod method) {
  FitResult fit;
  fit.nu = nu_eff / attenuation;
  fit.sigma_nu = std::sqrt(std::max(0.0, var_eff)) / attenuation;
  fit.p0 = p0;
  fit.chi2_ndf = ndf > 0 ? chi2 / ndf : 0.0;
  fit.method = method;
  return fit;
}

int fold3_bin(int k, int counter_count) {
  int m = (3 * k) % counter_count;
  if (m > counter_count / 2) m = counter_count - m;
  return m;
}

struct ConcurrenceBinInput {
  AngleHistogram hist;
  MeanAccumulator theta_mean;
  MeanAccumulator a_scattered;
  MeanAccumulator a_partner;
  std::size_t n_events = 0;
};

std::optional<ConcurrencePoint> finish_bin(ConcurrenceBinInput& in, double theta_low,
                                           double theta_high, FitMethod method) {
  if (in.n_events == 0) return std::nullopt;
  FitResult fit;
  try {
    fit = method == FitMethod::direct ? fit_direct(in.hist) : fit_chsh(in.hist);
  } catch (const FitError&) {
    return std::nullopt;
  }
  const auto a_s = in.a_scattered.finish();
  const auto a_p = in.a_partner.finish();
  ConcurrencePoint point =
      extract_concurrence(fit, a_s.mean, a_p.mean, a_s.stderr_mean, a_p.stderr_mean);
  point.theta_low = theta_low;
  point.theta_high = theta_high;
  point.theta_mean = in.theta_mean.n > 0 ? in.theta_mean.sum / in.theta_mean.n : 0.0;
  point.n_events = in.n_events;
  point.low_statistics = in.n_events < 100;
  return point;
}

}  // namespace

AngleHistogram make_histogram(const GeometryConfig& cfg) {
  AngleHistogram hist;
  const int n_bins = cfg.counter_count / 2 + 1;
  hist.bin_centers.resize(n_bins);
  hist.counts.assign(n_bins, 0.0);
  hist.exposure.assign(n_bins, 2.0);
  for (int k = 0; k < n_bins; ++k) hist.bin_centers[k] = k * cfg.counter_azimuth_step;
  hist.exposure.front() = 1.0;  // only the zero-separation pairings
  hist.exposure.back() = 1.0;   // only the opposite-counter pairings
  const double q = std::sin(cfg.counter_azimuth_step) / cfg.counter_azimuth_step;
  hist.attenuation = q * q;  // both photon azimuths are sector-quantized
  return hist;
}

AngleHistogram make_synthetic_histogram(std::span<const double> counts, int counter_count) {
  AngleHistogram hist;
  const std::size_t n_bins = counts.size();
  const double step = M_PI / (n_bins - 1);
  hist.bin_centers.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) hist.bin_centers[k] = k * step;
  hist.counts.assign(counts.begin(), counts.end());
  hist.exposure.assign(n_bins, 1.0);
  hist.attenuation = 1.0;
  (void)counter_count;
  return hist;
}

AngleHistogram histogram_events(std::span<const EventRecord> records, const ClassFilter& filter,
                                const events::BinningScheme& scheme, const GeometryConfig& cfg,
                                double source_energy_kev) {
  AngleHistogram hist = make_histogram(cfg);
  hist.event_class = filter.tag;
  for (const auto& rec : records) {
    if (rec.lost) continue;
    const EventClass cls = events::classify(rec, scheme, source_energy_kev);
    if (cls.tag != filter.tag) continue;
    if (filter.bin >= 0 && cls.bin != filter.bin) continue;
    const int k = fold_counter_difference(rec.counter_a, rec.counter_b, cfg.counter_count);
    hist.counts[k] += 1.0;
  }
  return hist;
}

FitResult fit_direct(const AngleHistogram& hist) {
  const std::size_t n = hist.n_bins();
  std::size_t populated = 0;
  for (double c : hist.counts) {
    if (c > 0.0) ++populated;
  }
  if (populated < 3) throw FitError("fit_direct: need at least 3 populated bins");

  double s_aa = 0.0, s_ac = 0.0, s_cc = 0.0, s_ay = 0.0, s_cy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = hist.exposure[k];
    const double y = hist.counts[k] / e;
    const double var = std::max(hist.counts[k], 1.0) / (e * e);
    const double w = 1.0 / var;
    const double c = std::cos(2.0 * hist.bin_centers[k]);
    s_aa += w;
    s_ac += w * c;
    s_cc += w * c * c;
    s_ay += w * y;
    s_cy += w * c * y;
  }
  const double det = s_aa * s_cc - s_ac * s_ac;
  if (!(det > 1e-12 * s_aa * s_cc)) throw FitError("fit_direct: degenerate design matrix");

  const double a = (s_cc * s_ay - s_ac * s_cy) / det;
  const double b = (s_aa * s_cy - s_ac * s_ay) / det;
  if (!(a > 0.0)) throw FitError("fit_direct: non-positive normalization");
  const double var_a = s_cc / det;
  const double var_b = s_aa / det;
  const double cov_ab = -s_ac / det;

  const double nu_eff = -b / a;
  const double var_nu = (var_b + nu_eff * nu_eff * var_a + 2.0 * nu_eff * cov_ab) / (a * a);

  double chi2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = hist.exposure[k];
    const double y = hist.counts[k] / e;
    const double var = std::max(hist.counts[k], 1.0) / (e * e);
    const double model = a + b * std::cos(2.0 * hist.bin_centers[k]);
    chi2 += (y - model) * (y - model) / var;
  }
  return fit_from_parts(nu_eff, var_nu, a, chi2, static_cast<int>(n) - 2, hist.attenuation,
                        FitMethod::direct);
}

SCurve build_s_function(const AngleHistogram& hist) {
  const std::size_t n = hist.n_bins();
  if (n < 2 || hist.counts.size() != n || hist.exposure.size() != n) {
    throw FitError("build_s_function: malformed histogram");
  }
  const int counter_count = 2 * (static_cast<int>(n) - 1);
  double total = 0.0, total_exposure = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += hist.counts[k];
    total_exposure += hist.exposure[k];
  }
  const double p0 = total / total_exposure;
  if (!(p0 > 0.0)) throw FitError("build_s_function: empty histogram");

  SCurve curve;
  curve.attenuation = hist.attenuation;
  curve.phi.resize(n);
  curve.s.resize(n);
  curve.sigma.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int j = fold3_bin(static_cast<int>(k), counter_count);
    if (j < 0 || static_cast<std::size_t>(j) >= n) {
      throw FitError("build_s_function: missing 3-phi bin");
    }
    const double nk = hist.counts[k] / hist.exposure[k] / p0;
    const double nj = hist.counts[j] / hist.exposure[j] / p0;
    curve.phi[k] = hist.bin_centers[k];
    curve.s[k] = 3.0 * nk - nj - 2.0;
    curve.sigma[k] = std::sqrt(std::max(hist.counts[k], 1.0)) / hist.exposure[k] / p0;
  }
  return curve;
}

FitResult fit_chsh(const SCurve& curve) {
  const std::size_t n = curve.phi.size();
  if (n < 2) throw FitError("fit_chsh: need at least 2 samples");
  double s_gg = 0.0, s_gs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double g =
        std::cos(6.0 * curve.phi[k]) - 3.0 * std::cos(2.0 * curve.phi[k]);
    const double w = 1.0 / (curve.sigma[k] * curve.sigma[k]);
    s_gg += w * g * g;
    s_gs += w * g * curve.s[k];
  }
  if (!(s_gg > 0.0)) throw FitError("fit_chsh: degenerate design");
  const double nu_eff = s_gs / s_gg;
  const double var_eff = 1.0 / s_gg;

  double chi2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double g =
        std::cos(6.0 * curve.phi[k]) - 3.0 * std::cos(2.0 * curve.phi[k]);
    const double w = 1.0 / (curve.sigma[k] * curve.sigma[k]);
    const double r = curve.s[k] - nu_eff * g;
    chi2 += w * r * r;
  }
  return fit_from_parts(nu_eff, var_eff, 1.0, chi2, static_cast<int>(n) - 1, curve.attenuation,
                        FitMethod::chsh);
}

FitResult fit_chsh(const AngleHistogram& hist) { return fit_chsh(build_s_function(hist)); }

double chsh_sigma_correlated(const AngleHistogram& hist) {
  const SCurve curve = build_s_function(hist);
  const std::size_t n = hist.n_bins();
  const int counter_count = 2 * (static_cast<int>(n) - 1);

  double total = 0.0, total_exposure = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += hist.counts[k];
    total_exposure += hist.exposure[k];
  }
  const double p0 = total / total_exposure;

  std::vector<double> g(n), w(n);
  double s_gg = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = std::cos(6.0 * curve.phi[k]) - 3.0 * std::cos(2.0 * curve.phi[k]);
    w[k] = 1.0 / (curve.sigma[k] * curve.sigma[k]);
    s_gg += w[k] * g[k] * g[k];
  }

  // d nu / d counts_j through the normalized counts and the shared
  // normalization p0 = total / total_exposure.
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double deriv = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const int fk = fold3_bin(static_cast<int>(k), counter_count);
      const double nk = hist.counts[k] / hist.exposure[k] / p0;
      const double nfk = hist.counts[fk] / hist.exposure[fk] / p0;
      double ds = 0.0;
      if (k == j) ds += 3.0 / (hist.exposure[j] * p0);
      if (static_cast<std::size_t>(fk) == j) ds -= 1.0 / (hist.exposure[j] * p0);
      ds -= (3.0 * nk - nfk) / (total_exposure * p0);
      deriv += w[k] * g[k] * ds;
    }
    deriv /= s_gg;
    var += deriv * deriv * std::max(hist.counts[j], 1.0);
  }
  return std::sqrt(var) / hist.attenuation;
}

double ratio_visibility(const AngleHistogram& hist) {
  const std::size_t n = hist.n_bins();
  const std::size_t k90 = (n - 1) / 2;
  if (std::abs(hist.bin_centers[k90] - M_PI / 2.0) > 1e-9) {
    throw AnalysisError("ratio_visibility: histogram lacks a 90-degree bin");
  }
  const double y0 = hist.counts[0] / hist.exposure[0];
  const double y90 = hist.counts[k90] / hist.exposure[k90];
  if (y0 + y90 <= 0.0) throw AnalysisError("ratio_visibility: empty bins");
  return (y90 - y0) / (y90 + y0) / hist.attenuation;
}

MeanAnalyzingPower mean_analyzing_power(std::span<const EventRecord> records, Arm arm,
                                        const ClassFilter& filter,
                                        const events::BinningScheme& scheme,
                                        double source_energy_kev) {
  MeanAccumulator acc;
  for (const auto& rec : records) {
    if (rec.lost) continue;
    const EventClass cls = events::classify(rec, scheme, source_energy_kev);
    if (cls.tag != filter.tag) continue;
    if (filter.bin >= 0 && cls.bin != filter.bin) continue;
    const char scattered = scattered_arm_of(rec, scheme);
    const auto a = event_analyzing_power(rec, scattered, arm, scheme, source_energy_kev);
    if (a) acc.add(*a);
  }
  return acc.finish();
}

ConcurrencePoint extract_concurrence(const FitResult& fit, double a_a, double a_b,
                                     double sigma_a_a, double sigma_a_b) {
  const double product = a_a * a_b;
  if (!(product > 1e-6)) {
    throw AnalysisError("extract_concurrence: analyzing-power product below 1e-6");
  }
  ConcurrencePoint point;
  point.nu = fit;
  point.mean_a_a = a_a;
  point.mean_a_b = a_b;
  point.c = fit.nu / product;
  const double rel_a = sigma_a_a / a_a;
  const double rel_b = sigma_a_b / a_b;
  point.sigma_c = std::sqrt(fit.sigma_nu * fit.sigma_nu / (product * product) +
                            point.c * point.c * (rel_a * rel_a + rel_b * rel_b));
  return point;
}

std::vector<ConcurrencePoint> concurrence_curve(std::span<const EventRecord> records,
                                                const events::BinningScheme& scheme,
                                                const GeometryConfig& cfg, FitMethod method,
                                                double source_energy_kev) {
  struct Group {
    ClassFilter filter;
    double theta_low;
    double theta_high;
  };
  std::vector<Group> groups;
  groups.push_back({{EventTag::direct, -1}, 0.0, 0.0});
  for (int bin = 0; bin < 5; ++bin) {
    groups.push_back(
        {{EventTag::pre_scattered, bin}, scheme.forward_edges[bin], scheme.forward_edges[bin + 1]});
  }
  groups.push_back({{EventTag::backscatter, -1}, scheme.backscatter_lo, scheme.backscatter_hi});

  std::vector<ConcurrenceBinInput> inputs(groups.size());
  for (auto& in : inputs) in.hist = make_histogram(cfg);

  for (const auto& rec : records) {
    if (rec.lost) continue;
    const EventClass cls = events::classify(rec, scheme, source_energy_kev);
    int group = -1;
    if (cls.tag == EventTag::direct) group = 0;
    if (cls.tag == EventTag::pre_scattered) group = 1 + cls.bin;
    if (cls.tag == EventTag::backscatter) group = 6;
    if (group < 0) continue;

    auto& in = inputs[group];
    const int k = fold_counter_difference(rec.counter_a, rec.counter_b, cfg.counter_count);
    in.hist.counts[k] += 1.0;
    ++in.n_events;
    if (cls.reconstructed_theta) in.theta_mean.add(*cls.reconstructed_theta);
    const char scattered = scattered_arm_of(rec, scheme);
    if (const auto a =
            event_analyzing_power(rec, scattered, Arm::scattered, scheme, source_energy_kev)) {
      in.a_scattered.add(*a);
    }
    if (const auto a =
            event_analyzing_power(rec, scattered, Arm::partner, scheme, source_energy_kev)) {
      in.a_partner.add(*a);
    }
  }

  std::vector<ConcurrencePoint> points;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (auto point = finish_bin(inputs[i], groups[i].theta_low, groups[i].theta_high, method)) {
      points.push_back(*point);
    }
  }
  return points;
}

struct ConcurrenceScan::Impl {
  std::vector<double> edges;
  events::BinningScheme scheme;
  GeometryConfig cfg;
  double source_energy_kev;
  std::vector<ConcurrenceBinInput> inputs;
};

ConcurrenceScan::ConcurrenceScan(std::span<const double> bin_edges, events::BinningScheme scheme,
                                 GeometryConfig cfg, double source_energy_kev)
    : impl_(std::make_unique<Impl>()) {
  if (bin_edges.size() < 2) throw AnalysisError("ConcurrenceScan: need >= 2 edges");
  impl_->edges.assign(bin_edges.begin(), bin_edges.end());
  impl_->scheme = scheme;
  impl_->cfg = cfg;
  impl_->source_energy_kev = source_energy_kev;
  impl_->inputs.resize(bin_edges.size() - 1);
  for (auto& in : impl_->inputs) in.hist = make_histogram(cfg);
}

ConcurrenceScan::~ConcurrenceScan() = default;
ConcurrenceScan::ConcurrenceScan(ConcurrenceScan&&) noexcept = default;
ConcurrenceScan& ConcurrenceScan::operator=(ConcurrenceScan&&) noexcept = default;

void ConcurrenceScan::add(const EventRecord& rec) {
  if (rec.lost) return;
  auto& st = *impl_;
  const EventClass cls = events::classify(rec, st.scheme, st.source_energy_kev);
  if (!cls.reconstructed_theta) return;
  const char scattered = scattered_arm_of(rec, st.scheme);
  if (scattered == 'x') return;
  const double theta = *cls.reconstructed_theta;
  int bin = -1;
  for (std::size_t i = 0; i + 1 < st.edges.size(); ++i) {
    if (theta >= st.edges[i] && theta < st.edges[i + 1]) {
      bin = static_cast<int>(i);
      break;
    }
  }
  if (bin < 0) return;

  auto& in = st.inputs[bin];
  const int k = fold_counter_difference(rec.counter_a, rec.counter_b, st.cfg.counter_count);
  in.hist.counts[k] += 1.0;
  ++in.n_events;
  in.theta_mean.add(theta);
  if (const auto a =
          event_analyzing_power(rec, scattered, Arm::scattered, st.scheme, st.source_energy_kev)) {
    in.a_scattered.add(*a);
  }
  if (const auto a =
          event_analyzing_power(rec, scattered, Arm::partner, st.scheme, st.source_energy_kev)) {
    in.a_partner.add(*a);
  }
}

std::vector<ConcurrencePoint> ConcurrenceScan::finish(FitMethod method) const {
  std::vector<ConcurrencePoint> points;
  for (std::size_t i = 0; i < impl_->inputs.size(); ++i) {
    auto in = impl_->inputs[i];
    if (auto point = finish_bin(in, impl_->edges[i], impl_->edges[i + 1], method)) {
      points.push_back(*point);
    }
  }
  return points;
}

std::vector<ConcurrencePoint> concurrence_by_theta_bins(std::span<const EventRecord> records,
                                                        std::span<const double> bin_edges,
                                                        const events::BinningScheme& scheme,
                                                        const GeometryConfig& cfg,
                                                        FitMethod method,
                                                        double source_energy_kev) {
  ConcurrenceScan scan(bin_edges, scheme, cfg, source_energy_kev);
  for (const auto& rec : records) scan.add(rec);
  return scan.finish(method);
}

}  // namespace cpol::analysis
