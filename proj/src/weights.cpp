#include "hdpf/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hdpf/error.hpp"

namespace hdpf {

double log_sum_exp(std::span<const double> log_values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : log_values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double total = 0.0;
  for (double v : log_values) total += std::exp(v - hi);
  return hi + std::log(total);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v)) throw DegenerateLikelihood("log-weight is NaN");
    hi = std::max(hi, v);
  }
  if (!std::isfinite(hi)) {
    throw DegenerateLikelihood("all weights underflow to zero");
  }
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - hi);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

DegeneracyStats degeneracy(std::span<const double> normalized_weights) {
  DegeneracyStats stats;
  double max_w = 0.0;
  double sum_sq = 0.0;
  for (double w : normalized_weights) {
    max_w = std::max(max_w, w);
    sum_sq += w * w;
  }
  stats.max_weight = max_w;
  const double n = static_cast<double>(normalized_weights.size());
  stats.effective_sample_size = std::clamp(1.0 / sum_sq, 1.0, n);
  return stats;
}

CategoricalTable::CategoricalTable(std::span<const double> weights)
    : cdf_(weights.size()) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i];
    cdf_[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateLikelihood("categorical weights have no positive mass");
  }
}

int CategoricalTable::sample(double u) const { return sample_cumulative(cdf_, u); }

int sample_cumulative(std::span<const double> cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  const auto idx = static_cast<int>(it - cdf.begin());
  // target < total always holds for u < 1, but rounding can put it on the end
  return std::min(idx, static_cast<int>(cdf.size()) - 1);
}

std::vector<int> resample(std::span<const double> normalized_weights, int count,
                          ResamplingScheme scheme, Rng& rng) {
  std::vector<int> out(static_cast<std::size_t>(count));
  if (scheme == ResamplingScheme::kMultinomial) {
    const CategoricalTable table(normalized_weights);
    for (auto& idx : out) idx = table.sample(rng);
    return out;
  }
  const CategoricalTable table(normalized_weights);
  const double offset = rng.uniform();
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = table.sample((k + offset) / count);
  }
  return out;
}

}  // namespace hdpf
