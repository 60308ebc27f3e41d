#include "hdpf/model.hpp"

#include <cmath>
#include <string>

#include "hdpf/error.hpp"

namespace hdpf {

void ModelSpec::validate() const {
  if (locus_count < 1) {
    throw InvalidDimension("model: locus_count must be positive, got " +
                           std::to_string(locus_count));
  }
  if (novelty_var.size() != locus_count || obs_var.size() != locus_count) {
    throw InvalidDimension("model: variance vectors must have length " +
                           std::to_string(locus_count));
  }
  for (int l = 0; l < locus_count; ++l) {
    if (!(novelty_var[l] > 0.0) || !(obs_var[l] > 0.0)) {
      throw DomainError("model: variances must be positive at locus " +
                        std::to_string(l));
    }
  }
  if (!(std::abs(sub_coeff) + std::abs(diag_coeff) + std::abs(super_coeff) <
        1.0)) {
    throw DomainError("model: |a| + |b| + |c| must be below 1");
  }
  if (!(init_var >= 0.0)) throw DomainError("model: init_var must be >= 0");
  if (low_obs_var_stride < 1) {
    throw InvalidDimension("model: low_obs_var_stride must be positive");
  }
}

ModelSpec build_paper_model(int locus_count, int low_obs_var_stride) {
  if (locus_count < 2) {
    throw InvalidDimension("paper model needs at least 2 loci, got " +
                           std::to_string(locus_count));
  }
  if (low_obs_var_stride < 1) {
    throw InvalidDimension("low_obs_var_stride must be positive");
  }
  ModelSpec m;
  m.locus_count = locus_count;
  m.sub_coeff = kPaperSub;
  m.diag_coeff = kPaperDiag;
  m.super_coeff = kPaperSuper;
  m.novelty_var.resize(locus_count);
  m.obs_var.resize(locus_count);
  for (int l = 0; l < locus_count; ++l) {
    m.novelty_var[l] = (l % 2 == 0) ? kPaperNoveltyHigh : kPaperNoveltyLow;
    m.obs_var[l] = (l % low_obs_var_stride == 0) ? kPaperObsLow : kPaperObsHigh;
  }
  m.init_mean = 0.0;
  m.init_var = kPaperInitVar;
  m.low_obs_var_stride = low_obs_var_stride;
  return m;
}

Eigen::MatrixXd transition_matrix(const ModelSpec& m) {
  const int n = m.locus_count;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    p(l, l) = m.diag_coeff;
    if (l > 0) p(l, l - 1) = m.sub_coeff;
    if (l + 1 < n) p(l, l + 1) = m.super_coeff;
  }
  return p;
}

namespace {

void check_length(Eigen::Index n, const ModelSpec& m, const char* what) {
  if (n != m.locus_count) {
    throw InvalidDimension(std::string(what) + ": expected length " +
                           std::to_string(m.locus_count) + ", got " +
                           std::to_string(n));
  }
}

void check_locus(int locus, const ModelSpec& m) {
  if (locus < 0 || locus >= m.locus_count) {
    throw InvalidDimension("locus " + std::to_string(locus) + " out of range");
  }
}

}  // namespace

StateVector progress_mean(const StateVector& x, const ModelSpec& m) {
  check_length(x.size(), m, "progress_mean");
  StateVector out(m.locus_count);
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  for (int l = 0; l < m.locus_count; ++l) out[l] = progress_mean_at(xs, l, m);
  return out;
}

StateVector sample_initial(const ModelSpec& m, Rng& rng) {
  StateVector x(m.locus_count);
  const double sd = std::sqrt(m.init_var);
  for (int l = 0; l < m.locus_count; ++l) x[l] = rng.normal(m.init_mean, sd);
  return x;
}

StateVector progress_sample(const StateVector& x, const ModelSpec& m, Rng& rng) {
  StateVector z = progress_mean(x, m);
  for (int l = 0; l < m.locus_count; ++l) {
    z[l] += std::sqrt(m.novelty_var[l]) * rng.normal();
  }
  return z;
}

Observation observe_sample(const StateVector& z, const ModelSpec& m, Rng& rng) {
  check_length(z.size(), m, "observe_sample");
  Observation y(m.locus_count);
  for (int l = 0; l < m.locus_count; ++l) {
    y[l] = z[l] + std::sqrt(m.obs_var[l]) * rng.normal();
  }
  return y;
}

double log_forward_density(const StateVector& x_prev, double z_val, int locus,
                           const ModelSpec& m) {
  check_length(x_prev.size(), m, "forward_density");
  check_locus(locus, m);
  const std::span<const double> xs(x_prev.data(),
                                   static_cast<std::size_t>(x_prev.size()));
  return log_normal_density(z_val, progress_mean_at(xs, locus, m),
                            m.novelty_var[locus]);
}

double forward_density(const StateVector& x_prev, double z_val, int locus,
                       const ModelSpec& m) {
  return std::exp(log_forward_density(x_prev, z_val, locus, m));
}

double log_obs_likelihood(double y_val, double z_val, int locus,
                          const ModelSpec& m) {
  check_locus(locus, m);
  return log_normal_density(y_val, z_val, m.obs_var[locus]);
}

double obs_likelihood(double y_val, double z_val, int locus,
                      const ModelSpec& m) {
  return std::exp(log_obs_likelihood(y_val, z_val, locus, m));
}

Trajectory simulate_trajectory(const ModelSpec& m, int steps, const Rng& rng) {
  m.validate();
  if (steps < 1) throw InvalidDimension("simulate_trajectory: steps must be >= 1");
  Trajectory traj;
  Rng init = rng.substream(tag::kInitial);
  traj.initial_state = sample_initial(m, init);
  StateVector current = traj.initial_state;
  for (int t = 1; t <= steps; ++t) {
    Rng progress = rng.substream(tag::kStep, t, tag::kProgress);
    Rng observe = rng.substream(tag::kStep, t, tag::kObserve);
    current = progress_sample(current, m, progress);
    traj.states.push_back(current);
    traj.observations.push_back(observe_sample(current, m, observe));
  }
  return traj;
}

}  // namespace hdpf
