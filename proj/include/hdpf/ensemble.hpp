#pragma once

#include <span>
#include <vector>

#include "hdpf/model.hpp"
#include "hdpf/random.hpp"

namespace hdpf {

/// M equally weighted particles over L loci.
struct Ensemble {
  ParticleMatrix particles;

  int size() const { return static_cast<int>(particles.rows()); }
  int dimension() const { return static_cast<int>(particles.cols()); }

  std::span<const double> particle(int i) const {
    return {particles.row(i).data(), static_cast<std::size_t>(particles.cols())};
  }

  Vector mean() const;
  /// Per-locus sample variance with divisor M - 1 (0 when M == 1).
  Vector variance() const;
};

/// Particles with unnormalized log-weights.
struct WeightedEnsemble {
  ParticleMatrix particles;
  std::vector<double> log_weights;

  std::vector<double> normalized_weights() const;
};

/// M iid draws from the initial distribution; particle i uses substream i.
Ensemble sample_initial_ensemble(const ModelSpec& m, int particle_count,
                                 const Rng& rng);

/// Pushes every particle through the transition once. Particle i draws its
/// noise from rng.substream(i), so the result is independent of threading.
ParticleMatrix progress_ensemble(const Ensemble& prior, const ModelSpec& m,
                                 const Rng& rng);

/// sum_l log f(y_l | z_l) for one particle.
double log_likelihood(std::span<const double> z, const Observation& y,
                      const ModelSpec& m);

}  // namespace hdpf
