#include "hdpf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdpf/error.hpp"

namespace hdpf {

std::string to_string(LocusClass c) {
  switch (c) {
    case LocusClass::kZoneCentral: return "central";
    case LocusClass::kZonePeripheral: return "peripheral";
    case LocusClass::kNotApplicable: return "n/a";
  }
  return "?";
}

GaussianBelief ensemble_gaussian_fit(const Ensemble& e, double ridge) {
  if (e.size() < 2) {
    throw InvalidDimension("ensemble_gaussian_fit: need at least 2 particles");
  }
  if (ridge < 0.0) throw DomainError("ensemble_gaussian_fit: negative ridge");
  GaussianBelief b;
  const Eigen::RowVectorXd mu = e.particles.colwise().mean();
  b.mean = mu.transpose();
  const Eigen::MatrixXd centered = e.particles.rowwise() - mu;
  b.covariance = (centered.transpose() * centered) / (e.size() - 1);
  // A fully collapsed ensemble has zero trace; fall back to an absolute ridge.
  const double trace = b.covariance.trace();
  b.covariance.diagonal().array() += trace > 0.0 ? ridge * trace / e.dimension() : ridge;
  return b;
}

double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q) {
  const int n = p.dimension();
  if (q.dimension() != n) throw InvalidDimension("gaussian_kl: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> lq(q.covariance);
  if (lq.info() != Eigen::Success) {
    throw SingularMatrix("gaussian_kl: q covariance is not positive definite");
  }
  const Eigen::LLT<Eigen::MatrixXd> lp(p.covariance);
  if (lp.info() != Eigen::Success) {
    throw SingularMatrix("gaussian_kl: p covariance is not positive definite");
  }
  const double trace_term = lq.solve(p.covariance).trace();
  const Vector diff = q.mean - p.mean;
  const Vector whitened = lq.matrixL().solve(diff);
  const double maha = whitened.squaredNorm();
  const double logdet_q = 2.0 * lq.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_p = 2.0 * lp.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double kl = 0.5 * (trace_term + maha - n + logdet_q - logdet_p);
  return std::max(0.0, kl);
}

Vector per_locus_sq_err(const Vector& ensemble_mean, const GaussianBelief& oracle) {
  if (ensemble_mean.size() != oracle.mean.size()) {
    throw InvalidDimension("per_locus_sq_err: dimension mismatch");
  }
  return (ensemble_mean - oracle.mean).array().square();
}

Vector per_locus_sq_err(const Ensemble& e, const GaussianBelief& oracle) {
  return per_locus_sq_err(e.mean(), oracle);
}

Vector variance_ratio(const Ensemble& e, const GaussianBelief& oracle) {
  if (e.dimension() != oracle.dimension()) {
    throw InvalidDimension("variance_ratio: dimension mismatch");
  }
  return e.variance().array() / oracle.covariance.diagonal().array();
}

std::vector<LocusClass> classify_loci(const ZonePartition& partition) {
  std::vector<LocusClass> out(static_cast<std::size_t>(partition.locus_count),
                              LocusClass::kZonePeripheral);
  for (const Zone& z : partition.zones) {
    if (z.size() % 2 == 1) {
      out[static_cast<std::size_t>(z.begin + z.size() / 2)] = LocusClass::kZoneCentral;
    }
  }
  return out;
}

MetricsRecord compute_metrics(int time, const Ensemble& e,
                              const GaussianBelief& oracle,
                              std::vector<LocusClass> classes, double ridge) {
  MetricsRecord r;
  r.time = time;
  r.per_locus_sq_err = per_locus_sq_err(e, oracle);
  r.variance_ratio = variance_ratio(e, oracle);
  const GaussianBelief fit = ensemble_gaussian_fit(e, ridge);
  r.kl_divergence = gaussian_kl(oracle, fit);
  r.kl_reverse = gaussian_kl(fit, oracle);
  if (classes.empty()) {
    classes.assign(static_cast<std::size_t>(e.dimension()), LocusClass::kNotApplicable);
  }
  r.locus_class = std::move(classes);
  return r;
}

std::vector<TracePoint> summed_locus_trace(
    const std::vector<StateVector>& states,
    const std::vector<Observation>& observations,
    const std::vector<GaussianBelief>& beliefs,
    const std::vector<std::pair<std::string, std::vector<Vector>>>& ensemble_means,
    int from, int to) {
  const std::size_t steps = observations.size();
  if (states.size() != steps || beliefs.size() != steps + 1) {
    throw InvalidDimension("summed_locus_trace: inconsistent series lengths");
  }
  for (const auto& [name, means] : ensemble_means) {
    if (means.size() != steps) {
      throw InvalidDimension("summed_locus_trace: series '" + name +
                             "' has the wrong length");
    }
  }
  const int dim = steps ? static_cast<int>(states.front().size()) : 0;
  if (from < 0 || to < from || (steps && to >= dim)) {
    throw InvalidDimension("summed_locus_trace: locus range [" +
                           std::to_string(from) + ", " + std::to_string(to) +
                           "] out of bounds");
  }
  const auto sum = [&](const Vector& v) { return v.segment(from, to - from + 1).sum(); };
  std::vector<TracePoint> out;
  for (std::size_t t = 0; t < steps; ++t) {
    const int time = static_cast<int>(t) + 1;
    out.push_back({time, "truth", sum(states[t])});
    out.push_back({time, "observation", sum(observations[t])});
    out.push_back({time, "kalman", sum(beliefs[t + 1].mean)});
    for (const auto& [name, means] : ensemble_means) {
      out.push_back({time, name, sum(means[t])});
    }
  }
  return out;
}

}  // namespace hdpf
