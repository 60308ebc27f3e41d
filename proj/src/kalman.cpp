#include "hdpf/kalman.hpp"

#include <ostream>
#include <string>

#include "hdpf/csv.hpp"
#include "hdpf/error.hpp"

namespace hdpf {

GaussianBelief initial_belief(const ModelSpec& m) {
  GaussianBelief b;
  b.mean = Vector::Constant(m.locus_count, m.init_mean);
  b.covariance =
      Eigen::MatrixXd::Identity(m.locus_count, m.locus_count) * m.init_var;
  return b;
}

GaussianBelief kalman_predict(const GaussianBelief& belief, const ModelSpec& m) {
  if (belief.dimension() != m.locus_count) {
    throw InvalidDimension("kalman_predict: belief dimension mismatch");
  }
  const Eigen::MatrixXd p = transition_matrix(m);
  GaussianBelief out;
  out.mean = p * belief.mean;
  out.covariance = p * belief.covariance * p.transpose();
  out.covariance.diagonal() += m.novelty_var;
  return out;
}

GaussianBelief kalman_update(const GaussianBelief& belief, const Observation& y,
                             const ModelSpec& m) {
  if (belief.dimension() != m.locus_count || y.size() != m.locus_count) {
    throw InvalidDimension("kalman_update: dimension mismatch");
  }
  Eigen::MatrixXd innovation_cov = belief.covariance;
  innovation_cov.diagonal() += m.obs_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("kalman_update: innovation covariance is singular");
  }
  // K = C S^-1, computed as (S^-1 C)^T since both are symmetric.
  const Eigen::MatrixXd gain = llt.solve(belief.covariance).transpose();
  GaussianBelief out;
  out.mean = belief.mean + gain * (y - belief.mean);
  out.covariance = belief.covariance - gain * belief.covariance;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

std::vector<GaussianBelief> kalman_filter(
    const std::vector<Observation>& observations, const ModelSpec& m) {
  m.validate();
  std::vector<GaussianBelief> beliefs;
  beliefs.reserve(observations.size() + 1);
  beliefs.push_back(initial_belief(m));
  for (const auto& y : observations) {
    beliefs.push_back(kalman_update(kalman_predict(beliefs.back(), m), y, m));
  }
  return beliefs;
}

void write_beliefs_csv(std::ostream& out,
                       const std::vector<GaussianBelief>& beliefs) {
  CsvWriter csv(out, {"time", "locus", "mean", "variance"});
  for (std::size_t t = 0; t < beliefs.size(); ++t) {
    const auto& b = beliefs[t];
    for (int l = 0; l < b.dimension(); ++l) {
      csv.row(t, l, b.mean[l], b.covariance(l, l));
    }
  }
}

}  // namespace hdpf
