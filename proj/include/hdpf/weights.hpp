#pragma once

// Log-space weight normalization, degeneracy diagnostics and resampling.

#include <span>
#include <vector>

#include "hdpf/random.hpp"

namespace hdpf {

/// log(sum(exp(v))); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> log_values);

/// Normalized weights from log-weights via max subtraction. Throws
/// DegenerateLikelihood if no entry is finite or any is NaN.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

struct DegeneracyStats {
  double max_weight = 1.0;
  /// 1 / sum(w^2), always in [1, M].
  double effective_sample_size = 1.0;
};

DegeneracyStats degeneracy(std::span<const double> normalized_weights);

/// Cumulative table for repeated categorical draws; the final entry is the
/// total, so unnormalized weights are accepted.
class CategoricalTable {
 public:
  CategoricalTable() = default;
  explicit CategoricalTable(std::span<const double> weights);

  /// Index i with probability weights[i] / total, given u uniform on [0, 1).
  int sample(double u) const;
  int sample(Rng& rng) const { return sample(rng.uniform()); }
  int size() const { return static_cast<int>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
};

/// Draws from a cumulative array (last entry = total) by binary search.
int sample_cumulative(std::span<const double> cdf, double u);

enum class ResamplingScheme { kMultinomial, kSystematic };

/// Source indices for `count` output particles.
std::vector<int> resample(std::span<const double> normalized_weights, int count,
                          ResamplingScheme scheme, Rng& rng);

}  // namespace hdpf
