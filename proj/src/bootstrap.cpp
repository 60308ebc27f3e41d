#include "hdpf/bootstrap.hpp"

#include <cmath>
#include <string>

#include "hdpf/error.hpp"

namespace hdpf {

WeightedEnsemble bootstrap_weight(const ParticleMatrix& progressed,
                                  const Observation& y, const ModelSpec& m) {
  if (progressed.cols() != m.locus_count || y.size() != m.locus_count) {
    throw InvalidDimension("bootstrap_weight: dimension mismatch");
  }
  WeightedEnsemble w;
  w.particles = progressed;
  w.log_weights.resize(static_cast<std::size_t>(progressed.rows()));
  parallel_for(w.log_weights.size(), [&](std::size_t i) {
    const auto row = progressed.row(static_cast<Eigen::Index>(i));
    w.log_weights[i] = log_likelihood(
        {row.data(), static_cast<std::size_t>(m.locus_count)}, y, m);
  });
  return w;
}

std::vector<double> bootstrap_resampling_probabilities(
    const ParticleMatrix& progressed, const Observation& y, const ModelSpec& m) {
  return bootstrap_weight(progressed, y, m).normalized_weights();
}

BootstrapStepResult bootstrap_step(const Ensemble& prior, const Observation& y,
                                   const ModelSpec& m, const Rng& rng,
                                   ResamplingScheme scheme) {
  if (prior.size() < 1) throw InvalidDimension("bootstrap_step: empty ensemble");
  const ParticleMatrix progressed =
      progress_ensemble(prior, m, rng.substream(tag::kProgress));
  const auto probs = bootstrap_resampling_probabilities(progressed, y, m);
  Rng resample_rng = rng.substream(tag::kResample);
  const auto sources = resample(probs, prior.size(), scheme, resample_rng);

  BootstrapStepResult result;
  result.stats = degeneracy(probs);
  result.ensemble.particles.resize(prior.size(), m.locus_count);
  for (int i = 0; i < prior.size(); ++i) {
    result.ensemble.particles.row(i) = progressed.row(sources[i]);
  }
  return result;
}

void run_bootstrap_filter(const std::vector<Observation>& observations,
                          const ModelSpec& m, int particle_count,
                          const Rng& rng, const BootstrapObserver& observer,
                          ResamplingScheme scheme) {
  m.validate();
  Ensemble current =
      sample_initial_ensemble(m, particle_count, rng.substream(tag::kInitial));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const int time = static_cast<int>(t) + 1;
    auto step = bootstrap_step(current, observations[t], m,
                               rng.substream(tag::kStep, time), scheme);
    if (observer) observer(time, step.ensemble, step.stats);
    current = std::move(step.ensemble);
  }
}

std::vector<BootstrapStepResult> bootstrap_filter(
    const std::vector<Observation>& observations, const ModelSpec& m,
    int particle_count, const Rng& rng, ResamplingScheme scheme) {
  std::vector<BootstrapStepResult> out;
  run_bootstrap_filter(
      observations, m, particle_count, rng,
      [&](int, const Ensemble& e, const DegeneracyStats& s) {
        out.push_back({e, s});
      },
      scheme);
  return out;
}

}  // namespace hdpf
