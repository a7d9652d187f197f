#include "cpol/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "cpol/errors.hpp"

namespace cpol::mc {

using physics::LinearPolarization;
using physics::PhotonState;

namespace {

constexpr std::uint64_t kChunkSize = 8192;
constexpr std::uint64_t kBatchChunks = 128;
constexpr double kWeightBound = 2.0;  // (E_f/E_i)^2 gamma <= 2 for all energies

PhotonState scattered_state(const PhotonState& photon, double theta, double phi) {
  const auto kin = physics::make_kinematics(photon.energy_kev, theta);
  const Vec3 e2 = photon.basis_e2();
  const Vec3 t_hat = std::cos(phi) * photon.basis_e1 + std::sin(phi) * e2;
  const Vec3 n_hat = normalized(cross(photon.direction, t_hat));
  const Vec3 d_out = std::cos(theta) * photon.direction + std::sin(theta) * t_hat;

  const auto stokes_in = physics::stokes_relative_to_plane(photon.polarization, phi);
  const auto transfer = physics::stokes_compton_transfer(stokes_in, theta, kin.gamma);

  PhotonState out;
  out.energy_kev = kin.e_out;
  out.direction = normalized(d_out);
  out.basis_e1 = normalized(cross(n_hat, out.direction));  // in-plane transverse axis
  out.polarization = physics::polarization_from_stokes(transfer.out);
  return out;
}

ScatterSample finish_sample(const PhotonState& photon, double theta, double phi, int trials) {
  ScatterSample s;
  s.theta = theta;
  s.phi = phi;
  s.trials = trials;
  s.out = scattered_state(photon, theta, phi);
  return s;
}

/// Dihedral azimuth of plane-transverse direction t_hat about axis, measured
/// from the reference direction ref (both orthogonal to axis).
double dihedral_azimuth(const Vec3& ref, const Vec3& t_hat, const Vec3& axis) {
  return std::atan2(dot(cross(ref, t_hat), axis), dot(ref, t_hat));
}

/// Unit vector orthogonal to axis, along the reference normal's transverse
/// part. The reference plane contains every propagation axis except when both
/// arms pre-scattered; those events are rejected downstream, so the arbitrary
/// fallback only keeps their counters finite.
Vec3 reference_transverse(const Vec3& reference_normal, const Vec3& axis) {
  const Vec3 raw = cross(reference_normal, axis);
  const double n = norm(raw);
  if (n > 1e-9) return {raw.x / n, raw.y / n, raw.z / n};
  const Vec3 fallback = std::abs(axis.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
  return normalized(cross(fallback, axis));
}

int counter_from_azimuth(double azimuth, const GeometryConfig& cfg) {
  const long k = std::lround(azimuth / cfg.counter_azimuth_step);
  const int n = cfg.counter_count;
  return static_cast<int>(((k % n) + n) % n);
}

struct PrescatterDecision {
  bool scatter_a = false;
  bool scatter_b = false;
};

/// Fixed draw order keeps the record stream a pure function of the RNG stream.
PrescatterDecision decide_prescatter(const GeometryConfig& cfg, RngStream& rng) {
  PrescatterDecision d;
  const double p = cfg.prescatter_interaction_prob;
  switch (cfg.prescatter_arm) {
    case PrescatterArm::none:
      break;
    case PrescatterArm::a:
      d.scatter_a = rng.uniform() < p;
      break;
    case PrescatterArm::b:
      d.scatter_b = rng.uniform() < p;
      break;
    case PrescatterArm::random:
      d.scatter_a = rng.uniform() < p;
      d.scatter_b = rng.uniform() < p;
      break;
  }
  return d;
}

ScatterSample prescatter_sample(const PhotonState& photon, const GeometryConfig& cfg,
                                RngStream& rng) {
  if (cfg.prescatter_theta_window) {
    const auto& [lo, hi] = *cfg.prescatter_theta_window;
    return sample_compton_in_window(photon, rng, lo, hi);
  }
  return sample_compton(photon, rng);
}

void tally(TransportStats* stats, const ScatterSample& s) {
  if (stats) {
    stats->sampler_trials += s.trials;
    stats->sampler_accepts += 1;
  }
}

void record_truth(events::EventRecord& rec, const ScatterSample& s, char arm) {
  if (rec.truth) {
    rec.truth->which_arm = 'x';  // both pre-scatterers fired; kept for rejection accounting
  } else {
    rec.truth = events::EventTruth{s.theta, s.phi, arm};
  }
}

}  // namespace

PairSample generate_pair(const SourceConfig& src, RngStream& rng) {
  const double beta = M_PI * rng.uniform();  // lab azimuth of photon b's polarization plane
  PairSample pair;

  pair.photon_a.energy_kev = src.photon_energy_kev;
  pair.photon_a.direction = {0.0, 0.0, 1.0};
  pair.photon_a.basis_e1 = {1.0, 0.0, 0.0};
  pair.photon_a.polarization = {physics::normalize_pol_angle(beta + M_PI / 2.0), 1.0};

  pair.photon_b.energy_kev = src.photon_energy_kev;
  pair.photon_b.direction = {0.0, 0.0, -1.0};
  pair.photon_b.basis_e1 = {1.0, 0.0, 0.0};
  // basis_e2 = -y for the -z photon, so the lab plane at beta sits at -beta.
  pair.photon_b.polarization = {physics::normalize_pol_angle(-beta), 1.0};

  return pair;
}

double lab_polarization_angle(const PhotonState& photon) {
  const double psi = photon.polarization.angle;
  const Vec3 v = std::cos(psi) * photon.basis_e1 + std::sin(psi) * photon.basis_e2();
  double angle = std::atan2(v.y, v.x);
  return physics::normalize_pol_angle(angle);
}

ScatterSample sample_compton(const PhotonState& photon, RngStream& rng) {
  int trials = 0;
  for (;;) {
    ++trials;
    const double cos_theta = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double theta = std::acos(cos_theta);
    const double w =
        physics::klein_nishina_weight(photon.energy_kev, theta, phi, photon.polarization);
    if (rng.uniform() * kWeightBound < w) {
      return finish_sample(photon, theta, phi, trials);
    }
  }
}

ScatterSample sample_compton_in_window(const PhotonState& photon, RngStream& rng, double theta_lo,
                                       double theta_hi) {
  if (theta_lo < 0.0 || theta_hi > M_PI || theta_lo > theta_hi) {
    throw std::invalid_argument("sample_compton_in_window: window outside [0, pi]");
  }
  int trials = 0;
  if (theta_hi - theta_lo < 1e-12) {
    // Degenerate window: polar angle fixed, sample the azimuth alone.
    const double theta = theta_lo;
    const auto kin = physics::make_kinematics(photon.energy_kev, theta);
    const double c = std::cos(theta);
    const double s2 = 1.0 - c * c;
    const double ratio = kin.e_out / kin.e_in;
    const double w_max = ratio * ratio * (kin.gamma - s2 * (1.0 - photon.polarization.degree));
    for (;;) {
      ++trials;
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      const double w =
          physics::klein_nishina_weight(photon.energy_kev, theta, phi, photon.polarization);
      if (rng.uniform() * w_max < w) return finish_sample(photon, theta, phi, trials);
    }
  }
  const double c_lo = std::cos(theta_hi);
  const double c_hi = std::cos(theta_lo);
  for (;;) {
    ++trials;
    const double cos_theta = rng.uniform(c_lo, c_hi);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double theta = std::acos(cos_theta);
    const double w =
        physics::klein_nishina_weight(photon.energy_kev, theta, phi, photon.polarization);
    if (rng.uniform() * kWeightBound < w) return finish_sample(photon, theta, phi, trials);
  }
}

events::EventRecord transport_ideal(const PairSample& pair, const GeometryConfig& cfg,
                                    RngStream& rng, std::uint64_t event_id,
                                    TransportStats* stats) {
  events::EventRecord rec;
  rec.event_id = event_id;

  PhotonState a = pair.photon_a;
  PhotonState b = pair.photon_b;
  Vec3 reference_normal{0.0, 1.0, 0.0};  // lab x-z plane when nothing pre-scattered

  const PrescatterDecision decision = decide_prescatter(cfg, rng);
  if (decision.scatter_a) {
    const ScatterSample s = prescatter_sample(a, cfg, rng);
    tally(stats, s);
    rec.de_pre_a = a.energy_kev - s.out.energy_kev;
    reference_normal = normalized(cross(a.direction, std::cos(s.phi) * a.basis_e1 +
                                                         std::sin(s.phi) * a.basis_e2()));
    record_truth(rec, s, 'a');
    a = s.out;
  }
  if (decision.scatter_b) {
    const ScatterSample s = prescatter_sample(b, cfg, rng);
    tally(stats, s);
    rec.de_pre_b = b.energy_kev - s.out.energy_kev;
    if (!decision.scatter_a) {
      reference_normal = normalized(cross(b.direction, std::cos(s.phi) * b.basis_e1 +
                                                           std::sin(s.phi) * b.basis_e2()));
    }
    record_truth(rec, s, 'b');
    b = s.out;
  }

  const auto measure = [&](const PhotonState& photon, double& e_main, double& e_counter,
                           int& counter) {
    const ScatterSample s = sample_compton(photon, rng);
    tally(stats, s);
    e_main = photon.energy_kev - s.out.energy_kev;
    e_counter = s.out.energy_kev;
    // Scattering-plane azimuth about the photon's own axis, measured from the
    // reference plane; the sign ties the azimuth orientation to the
    // propagation hemisphere so that counter differences compose the
    // forward and backward angle conventions automatically.
    const Vec3 t_hat =
        std::cos(s.phi) * photon.basis_e1 + std::sin(s.phi) * photon.basis_e2();
    const Vec3 ref_transverse = reference_transverse(reference_normal, photon.direction);
    double phi_own = dihedral_azimuth(ref_transverse, t_hat, photon.direction);
    const double phi_lab = photon.direction.z >= 0.0 ? -phi_own : phi_own;
    counter = counter_from_azimuth(phi_lab, cfg);
  };

  measure(a, rec.e_main_a, rec.e_counter_a, rec.counter_a);
  measure(b, rec.e_main_b, rec.e_counter_b, rec.counter_b);
  return rec;
}

events::EventRecord transport_realistic(const PairSample& pair, const GeometryConfig& cfg,
                                        RngStream& rng, std::uint64_t event_id,
                                        TransportStats* stats) {
  events::EventRecord rec;
  rec.event_id = event_id;

  PhotonState a = pair.photon_a;
  PhotonState b = pair.photon_b;

  const PrescatterDecision decision = decide_prescatter(cfg, rng);
  const auto prescatter = [&](PhotonState& photon, double& de_pre, char arm) {
    const double e_source = photon.energy_kev;
    const ScatterSample s = prescatter_sample(photon, cfg, rng);
    tally(stats, s);
    const double de_true = e_source - s.out.energy_kev;
    // The reconstruction accuracy is driven by the intermediate-scatterer
    // energy resolution; smear the angle-equivalent and re-encode the deposit
    // so that theta(de_pre) carries exactly the configured spread.
    double de_recorded = de_true;
    if (de_true > 1e-9) {
      const double resol = cfg.gagg_resolution_coeff / std::sqrt(de_true / 30.0);
      const double theta_meas = std::clamp(s.theta * (1.0 + resol * rng.normal()), 0.0, M_PI);
      de_recorded = physics::deposit_from_theta(theta_meas, e_source);
    }
    de_pre = de_recorded;
    record_truth(rec, s, arm);
    photon = s.out;
  };
  if (decision.scatter_a) prescatter(a, rec.de_pre_a, 'a');
  if (decision.scatter_b) prescatter(b, rec.de_pre_b, 'b');

  const double accept_lo = cfg.main_accept_center - cfg.main_accept_halfwidth;
  const double accept_hi = cfg.main_accept_center + cfg.main_accept_halfwidth;

  const auto measure = [&](const PhotonState& photon, double& e_main, double& e_counter,
                           int& counter) {
    const ScatterSample s = sample_compton(photon, rng);
    tally(stats, s);
    if (s.theta < accept_lo || s.theta > accept_hi) {
      rec.lost = true;
      return;
    }
    e_main = photon.energy_kev - s.out.energy_kev;
    const double e_true = s.out.energy_kev;
    const double sigma = cfg.nai_resolution_at_511 * std::sqrt(511.0 / e_true) * e_true;
    e_counter = std::max(0.0, e_true + sigma * rng.normal());
    const double lab_azimuth = std::atan2(s.out.direction.y, s.out.direction.x);
    counter = counter_from_azimuth(lab_azimuth, cfg);
  };

  measure(a, rec.e_main_a, rec.e_counter_a, rec.counter_a);
  measure(b, rec.e_main_b, rec.e_counter_b, rec.counter_b);

  if (rec.lost) {
    // No coincidence trigger: keep the record for efficiency accounting only.
    rec.e_main_a = rec.e_main_b = 0.0;
    rec.e_counter_a = rec.e_counter_b = 0.0;
    rec.counter_a = rec.counter_b = 0;
  }
  return rec;
}

RunStats run_simulation(const SourceConfig& src, const GeometryConfig& cfg, int workers,
                        const EventSink& sink) {
  if (workers < 1) throw std::invalid_argument("run_simulation: workers must be >= 1");
  cfg.validate();

  RunStats total;
  total.generated = src.pair_count;
  const std::uint64_t n_chunks = (src.pair_count + kChunkSize - 1) / kChunkSize;

  std::vector<events::EventRecord> chunk_records[kBatchChunks];
  TransportStats chunk_stats[kBatchChunks];

  for (std::uint64_t batch_start = 0; batch_start < n_chunks; batch_start += kBatchChunks) {
    const std::uint64_t batch_count = std::min<std::uint64_t>(kBatchChunks, n_chunks - batch_start);

    std::atomic<std::uint64_t> next{0};
    const auto worker = [&]() {
      for (;;) {
        const std::uint64_t local = next.fetch_add(1);
        if (local >= batch_count) return;
        const std::uint64_t chunk = batch_start + local;
        const std::uint64_t first = chunk * kChunkSize;
        const std::uint64_t count = std::min(kChunkSize, src.pair_count - first);

        RngStream rng(src.seed, chunk);
        auto& records = chunk_records[local];
        records.clear();
        records.reserve(count);
        chunk_stats[local] = {};
        for (std::uint64_t i = 0; i < count; ++i) {
          const PairSample pair = generate_pair(src, rng);
          const std::uint64_t id = first + i;
          records.push_back(cfg.mode == GeometryMode::ideal
                                ? transport_ideal(pair, cfg, rng, id, &chunk_stats[local])
                                : transport_realistic(pair, cfg, rng, id, &chunk_stats[local]));
        }
      }
    };

    const int n_threads = static_cast<int>(std::min<std::uint64_t>(workers, batch_count));
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      threads.reserve(n_threads);
      for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }

    for (std::uint64_t local = 0; local < batch_count; ++local) {
      const auto& records = chunk_records[local];
      for (const auto& rec : records) {
        if (rec.lost) {
          ++total.lost;
        } else {
          ++total.triggered;
        }
        if (rec.truth) {
          if (rec.truth->which_arm == 'a') ++total.prescattered_a;
          if (rec.truth->which_arm == 'b') ++total.prescattered_b;
          if (rec.truth->which_arm == 'x') ++total.prescattered_both;
        }
      }
      total.sampler_trials += chunk_stats[local].sampler_trials;
      total.sampler_accepts += chunk_stats[local].sampler_accepts;
      if (sink) sink(std::span<const events::EventRecord>(records));
    }
  }
  return total;
}

}  // namespace cpol::mc
