#pragma once

// Bootstrap particle filter: progress, weight by the full likelihood,
// resample globally.

#include <functional>
#include <vector>

#include "hdpf/ensemble.hpp"
#include "hdpf/model.hpp"
#include "hdpf/weights.hpp"

namespace hdpf {

struct BootstrapStepResult {
  Ensemble ensemble;
  DegeneracyStats stats;
};

/// Log-weights of already-progressed particles.
WeightedEnsemble bootstrap_weight(const ParticleMatrix& progressed,
                                  const Observation& y, const ModelSpec& m);

/// Normalized probabilities used by the resampling draw.
std::vector<double> bootstrap_resampling_probabilities(
    const ParticleMatrix& progressed, const Observation& y, const ModelSpec& m);

BootstrapStepResult bootstrap_step(
    const Ensemble& prior, const Observation& y, const ModelSpec& m,
    const Rng& rng, ResamplingScheme scheme = ResamplingScheme::kMultinomial);

/// Called after each step with the 1-based time index.
using BootstrapObserver =
    std::function<void(int, const Ensemble&, const DegeneracyStats&)>;

void run_bootstrap_filter(
    const std::vector<Observation>& observations, const ModelSpec& m,
    int particle_count, const Rng& rng, const BootstrapObserver& observer,
    ResamplingScheme scheme = ResamplingScheme::kMultinomial);

/// Keeps every step; for large runs prefer run_bootstrap_filter.
std::vector<BootstrapStepResult> bootstrap_filter(
    const std::vector<Observation>& observations, const ModelSpec& m,
    int particle_count, const Rng& rng,
    ResamplingScheme scheme = ResamplingScheme::kMultinomial);

}  // namespace hdpf
