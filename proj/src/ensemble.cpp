#include "hdpf/ensemble.hpp"

#include <cmath>
#include <string>

#include "hdpf/error.hpp"
#include "hdpf/weights.hpp"

namespace hdpf {

Vector Ensemble::mean() const { return particles.colwise().mean().transpose(); }

Vector Ensemble::variance() const {
  const int n = size();
  if (n < 2) return Vector::Zero(dimension());
  const Eigen::RowVectorXd mu = particles.colwise().mean();
  return ((particles.rowwise() - mu).array().square().colwise().sum() / (n - 1))
      .transpose();
}

std::vector<double> WeightedEnsemble::normalized_weights() const {
  return normalize_log_weights(log_weights);
}

Ensemble sample_initial_ensemble(const ModelSpec& m, int particle_count,
                                 const Rng& rng) {
  if (particle_count < 1) {
    throw InvalidDimension("particle count must be >= 1, got " +
                           std::to_string(particle_count));
  }
  Ensemble e;
  e.particles.resize(particle_count, m.locus_count);
  const double sd = std::sqrt(m.init_var);
  parallel_for(static_cast<std::size_t>(particle_count), [&](std::size_t i) {
    Rng r = rng.substream(i);
    for (int l = 0; l < m.locus_count; ++l) {
      e.particles(static_cast<Eigen::Index>(i), l) = r.normal(m.init_mean, sd);
    }
  });
  return e;
}

ParticleMatrix progress_ensemble(const Ensemble& prior, const ModelSpec& m,
                                 const Rng& rng) {
  if (prior.dimension() != m.locus_count) {
    throw InvalidDimension("progress_ensemble: ensemble dimension mismatch");
  }
  ParticleMatrix out(prior.size(), m.locus_count);
  Vector sd = m.novelty_var.array().sqrt();
  parallel_for(static_cast<std::size_t>(prior.size()), [&](std::size_t i) {
    Rng r = rng.substream(i);
    const auto x = prior.particle(static_cast<int>(i));
    for (int l = 0; l < m.locus_count; ++l) {
      out(static_cast<Eigen::Index>(i), l) =
          progress_mean_at(x, l, m) + sd[l] * r.normal();
    }
  });
  return out;
}

double log_likelihood(std::span<const double> z, const Observation& y,
                      const ModelSpec& m) {
  double total = 0.0;
  for (int l = 0; l < m.locus_count; ++l) {
    total += log_normal_density(y[l], z[l], m.obs_var[l]);
  }
  return total;
}

}  // namespace hdpf
