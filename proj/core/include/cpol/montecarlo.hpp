#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cpol/events.hpp"
#include "cpol/geometry.hpp"
#include "cpol/physics.hpp"
#include "cpol/rng.hpp"

namespace cpol::mc {

/// A freshly emitted photon pair: back-to-back along +-z with exactly
/// orthogonal linear polarizations at a random azimuth.
struct PairSample {
  physics::PhotonState photon_a;
  physics::PhotonState photon_b;
};

PairSample generate_pair(const SourceConfig& src, RngStream& rng);

/// Lab azimuth of a photon's polarization plane, folded to [0, pi).
double lab_polarization_angle(const physics::PhotonState& photon);

/// One sampled Compton scattering: polar angle, scattering-plane azimuth in
/// the photon's transverse basis, and the outgoing photon with energy,
/// direction, basis and polarization updated.
struct ScatterSample {
  double theta = 0.0;
  double phi = 0.0;
  physics::PhotonState out;
  int trials = 0;  ///< rejection-sampler attempts, for acceptance accounting
};

/// Sample (theta, phi) from the polarized Compton angular density by
/// rejection with the global weight bound of 2.
ScatterSample sample_compton(const physics::PhotonState& photon, RngStream& rng);

/// Same, with theta restricted to [theta_lo, theta_hi]; a zero-width window
/// forces that polar angle and samples the azimuth alone.
ScatterSample sample_compton_in_window(const physics::PhotonState& photon, RngStream& rng,
                                       double theta_lo, double theta_hi);

/// Sampler trial statistics accumulated during transport.
struct TransportStats {
  std::uint64_t sampler_trials = 0;
  std::uint64_t sampler_accepts = 0;
};

/// Transport a pair through the idealized 4-pi setup: optional pre-scatter,
/// one Compton scattering per polarimeter with unrestricted angles, exact
/// energies, no smearing. Counter indices encode the exact scattering-plane
/// azimuths measured from the pre-scatter plane, with the orientation tied to
/// each photon's propagation direction.
events::EventRecord transport_ideal(const PairSample& pair, const GeometryConfig& cfg,
                                    RngStream& rng, std::uint64_t event_id,
                                    TransportStats* stats = nullptr);

/// Transport through the parameterized realistic setup: pre-scatterers
/// interact with the configured probability, the main scatterer accepts a
/// polar window (missed events are flagged lost), counters quantize the lab
/// azimuth of the scattered photon, and deposits are smeared per the
/// configured resolutions.
events::EventRecord transport_realistic(const PairSample& pair, const GeometryConfig& cfg,
                                        RngStream& rng, std::uint64_t event_id,
                                        TransportStats* stats = nullptr);

/// Aggregate counters for a simulation run.
struct RunStats {
  std::uint64_t generated = 0;
  std::uint64_t triggered = 0;
  std::uint64_t lost = 0;
  std::uint64_t prescattered_a = 0;
  std::uint64_t prescattered_b = 0;
  std::uint64_t prescattered_both = 0;
  std::uint64_t sampler_trials = 0;
  std::uint64_t sampler_accepts = 0;

  double sampler_acceptance() const {
    return sampler_trials ? static_cast<double>(sampler_accepts) / sampler_trials : 0.0;
  }
};

/// Ordered consumer of finished event chunks.
using EventSink = std::function<void(std::span<const events::EventRecord>)>;

/// Generate and transport src.pair_count pairs. Work is split into fixed
/// chunks, each driven by an RngStream keyed by its chunk index, so the
/// emitted records are a pure function of (src, cfg) and independent of the
/// worker count; chunks reach the sink in index order.
RunStats run_simulation(const SourceConfig& src, const GeometryConfig& cfg, int workers,
                        const EventSink& sink);

}  // namespace cpol::mc
