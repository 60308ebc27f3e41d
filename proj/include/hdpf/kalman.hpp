#pragma once

// Exact filtering for the linear-Gaussian lattice model. These beliefs are
// the reference every particle filter is scored against.

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "hdpf/model.hpp"

namespace hdpf {

struct GaussianBelief {
  Vector mean;
  Eigen::MatrixXd covariance;

  int dimension() const { return static_cast<int>(mean.size()); }
};

/// Belief at time 0: init_mean at every locus, covariance init_var * I.
GaussianBelief initial_belief(const ModelSpec& m);

/// mean' = P mean, cov' = P cov P^T + N.
GaussianBelief kalman_predict(const GaussianBelief& belief, const ModelSpec& m);

/// Measurement update with identity observation matrix and noise E.
/// Throws SingularMatrix if the innovation covariance cannot be factorized.
GaussianBelief kalman_update(const GaussianBelief& belief, const Observation& y,
                             const ModelSpec& m);

/// beliefs[0] is the initial belief, beliefs[t] the filter after y_t.
std::vector<GaussianBelief> kalman_filter(
    const std::vector<Observation>& observations, const ModelSpec& m);

/// Rows "time,locus,mean,variance" (header included).
void write_beliefs_csv(std::ostream& out,
                       const std::vector<GaussianBelief>& beliefs);

}  // namespace hdpf
