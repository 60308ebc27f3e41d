#pragma once

// Accuracy of particle ensembles against the exact Kalman beliefs.

#include <string>
#include <utility>
#include <vector>

#include "hdpf/block.hpp"
#include "hdpf/ensemble.hpp"
#include "hdpf/kalman.hpp"

namespace hdpf {

enum class LocusClass { kZoneCentral, kZonePeripheral, kNotApplicable };

std::string to_string(LocusClass c);

inline constexpr double kDefaultRidge = 1e-9;

/// Sample mean and covariance (divisor M - 1) with ridge * trace / L added
/// to the diagonal (plain ridge when the trace is zero). Throws
/// InvalidDimension for M < 2.
GaussianBelief ensemble_gaussian_fit(const Ensemble& e,
                                     double ridge = kDefaultRidge);

/// KL(p || q) between Gaussians, via Cholesky factors. Throws SingularMatrix
/// if either covariance is not positive definite.
double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q);

/// (ensemble mean - oracle mean)^2 per locus.
Vector per_locus_sq_err(const Ensemble& e, const GaussianBelief& oracle);
Vector per_locus_sq_err(const Vector& ensemble_mean, const GaussianBelief& oracle);

/// Ensemble variance / oracle variance per locus.
Vector variance_ratio(const Ensemble& e, const GaussianBelief& oracle);

/// The middle locus of an odd-sized zone is central, all others peripheral.
std::vector<LocusClass> classify_loci(const ZonePartition& partition);

struct MetricsRecord {
  int time = 0;
  Vector per_locus_sq_err;
  /// KL(oracle || fitted Gaussian), the headline number.
  double kl_divergence = 0.0;
  /// KL(fitted Gaussian || oracle).
  double kl_reverse = 0.0;
  Vector variance_ratio;
  std::vector<LocusClass> locus_class;
};

MetricsRecord compute_metrics(int time, const Ensemble& e,
                              const GaussianBelief& oracle,
                              std::vector<LocusClass> classes,
                              double ridge = kDefaultRidge);

struct TracePoint {
  int time = 0;
  std::string series;
  double value = 0.0;
};

/// Per time step t = 1..T, the sum over loci [from, to] (0-based, inclusive)
/// of the truth, the observation, the Kalman mean and every named ensemble
/// mean. `beliefs` has T + 1 entries (index 0 is the prior); each ensemble
/// series holds T mean vectors.
std::vector<TracePoint> summed_locus_trace(
    const std::vector<StateVector>& states,
    const std::vector<Observation>& observations,
    const std::vector<GaussianBelief>& beliefs,
    const std::vector<std::pair<std::string, std::vector<Vector>>>& ensemble_means,
    int from, int to);

}  // namespace hdpf
