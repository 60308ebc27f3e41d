#pragma once

// Linear-Gaussian lattice state-space model.
//
//   z = P x + delta,   delta ~ N(0, diag(novelty_var))
//   y = z + eps,       eps   ~ N(0, diag(obs_var))
//
// P is tridiagonal with constant bands (sub, diag, super); neighbours outside
// the lattice contribute zero. Each locus holds one real value.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hdpf/random.hpp"

namespace hdpf {

using Vector = Eigen::VectorXd;
using StateVector = Eigen::VectorXd;
using Observation = Eigen::VectorXd;
/// Particle storage, one particle per row.
using ParticleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelSpec {
  int locus_count = 0;
  double sub_coeff = 0.0;    // weight of x[l-1]
  double diag_coeff = 0.0;   // weight of x[l]
  double super_coeff = 0.0;  // weight of x[l+1]
  Vector novelty_var;
  Vector obs_var;
  double init_mean = 0.0;
  double init_var = 1.0;
  int low_obs_var_stride = 4;

  /// Throws InvalidDimension / DomainError on a violated invariant.
  void validate() const;
};

inline constexpr double kPaperSub = 0.4;
inline constexpr double kPaperDiag = 0.35;
inline constexpr double kPaperSuper = 0.05;
inline constexpr double kPaperNoveltyHigh = 1.0;
inline constexpr double kPaperNoveltyLow = 0.25;
inline constexpr double kPaperObsHigh = 1.0;
inline constexpr double kPaperObsLow = 0.16;
inline constexpr double kPaperInitVar = 5.0;

/// Paper preset. Low observation variance sits at 0-based loci l with
/// l % stride == 0 (1-based loci 1, 5, 9, ... for the default stride 4).
ModelSpec build_paper_model(int locus_count, int low_obs_var_stride = 4);

/// Dense L x L transition matrix.
Eigen::MatrixXd transition_matrix(const ModelSpec& m);

/// (P x)[locus] for a state given as contiguous values.
inline double progress_mean_at(std::span<const double> x, int locus,
                               const ModelSpec& m) {
  double mean = m.diag_coeff * x[locus];
  if (locus > 0) mean += m.sub_coeff * x[locus - 1];
  if (locus + 1 < m.locus_count) mean += m.super_coeff * x[locus + 1];
  return mean;
}

StateVector progress_mean(const StateVector& x, const ModelSpec& m);

StateVector sample_initial(const ModelSpec& m, Rng& rng);
StateVector progress_sample(const StateVector& x, const ModelSpec& m, Rng& rng);
Observation observe_sample(const StateVector& z, const ModelSpec& m, Rng& rng);

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double log_normal_density(double x, double mean, double var) {
  const double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

/// log f_P(z_val | x_prev) at one locus.
double log_forward_density(const StateVector& x_prev, double z_val, int locus,
                           const ModelSpec& m);
double forward_density(const StateVector& x_prev, double z_val, int locus,
                       const ModelSpec& m);

/// log f(y_val | z_val) at one locus.
double log_obs_likelihood(double y_val, double z_val, int locus,
                          const ModelSpec& m);
double obs_likelihood(double y_val, double z_val, int locus,
                      const ModelSpec& m);

/// A simulated run. states[t-1] and observations[t-1] belong to time t;
/// the time-0 state carries no observation.
struct Trajectory {
  StateVector initial_state;
  std::vector<StateVector> states;
  std::vector<Observation> observations;

  int steps() const { return static_cast<int>(observations.size()); }
};

Trajectory simulate_trajectory(const ModelSpec& m, int steps, const Rng& rng);

}  // namespace hdpf
