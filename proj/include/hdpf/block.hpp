#pragma once

// Block particle filter: the lattice is cut into contiguous zones that are
// weighted and resampled independently, then stitched back together.

#include <functional>
#include <vector>

#include "hdpf/ensemble.hpp"
#include "hdpf/model.hpp"
#include "hdpf/weights.hpp"

namespace hdpf {

struct Zone {
  int begin = 0;  // first locus, 0-based
  int end = 0;    // one past the last locus

  int size() const { return end - begin; }
  bool contains(int locus) const { return locus >= begin && locus < end; }
};

struct ZonePartition {
  std::vector<Zone> zones;
  int zone_size = 1;
  int locus_count = 0;

  int count() const { return static_cast<int>(zones.size()); }
  int zone_of(int locus) const { return locus / zone_size; }
};

/// Consecutive blocks of `zone_size`; the last zone holds the remainder.
ZonePartition make_partition(int locus_count, int zone_size);

/// M x J matrix of per-zone log-weights sum_{l in zone} log f(y_l | z_l).
ParticleMatrix zone_log_weights(const ParticleMatrix& progressed,
                                const Observation& y,
                                const ZonePartition& partition,
                                const ModelSpec& m);

/// Normalized resampling probabilities, one vector per zone. Throws
/// DegenerateLikelihood naming the zone whose weights all underflow.
std::vector<std::vector<double>> zone_resampling_probabilities(
    const ParticleMatrix& zone_log_w);

struct BlockStepResult {
  Ensemble ensemble;
  /// sources(i, j): progressed particle that supplied zone j of output i.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sources;
  std::vector<DegeneracyStats> zone_stats;
};

/// Draws k(i, j) ~ probs[j] for every output particle i and zone j using
/// substream (j, i) of `rng`, then copies each zone from its source.
BlockStepResult stitch_zones(const ParticleMatrix& progressed,
                             const std::vector<std::vector<double>>& probs,
                             const ZonePartition& partition, const Rng& rng);

BlockStepResult block_step(const Ensemble& prior, const Observation& y,
                           const ZonePartition& partition, const ModelSpec& m,
                           const Rng& rng);

using BlockObserver = std::function<void(int, const BlockStepResult&)>;

void run_block_filter(const std::vector<Observation>& observations,
                      const ZonePartition& partition, const ModelSpec& m,
                      int particle_count, const Rng& rng,
                      const BlockObserver& observer);

std::vector<BlockStepResult> block_filter(
    const std::vector<Observation>& observations,
    const ZonePartition& partition, const ModelSpec& m, int particle_count,
    const Rng& rng);

}  // namespace hdpf
