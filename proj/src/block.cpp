#include "hdpf/block.hpp"

#include <string>

#include "hdpf/error.hpp"

namespace hdpf {

ZonePartition make_partition(int locus_count, int zone_size) {
  if (locus_count < 1) throw InvalidDimension("make_partition: no loci");
  if (zone_size < 1) {
    throw InvalidDimension("make_partition: zone_size must be >= 1, got " +
                           std::to_string(zone_size));
  }
  ZonePartition p;
  p.zone_size = zone_size;
  p.locus_count = locus_count;
  for (int begin = 0; begin < locus_count; begin += zone_size) {
    p.zones.push_back({begin, std::min(locus_count, begin + zone_size)});
  }
  return p;
}

ParticleMatrix zone_log_weights(const ParticleMatrix& progressed,
                                const Observation& y,
                                const ZonePartition& partition,
                                const ModelSpec& m) {
  if (progressed.cols() != m.locus_count || y.size() != m.locus_count ||
      partition.locus_count != m.locus_count) {
    throw InvalidDimension("zone_log_weights: dimension mismatch");
  }
  ParticleMatrix out(progressed.rows(), partition.count());
  parallel_for(static_cast<std::size_t>(progressed.rows()), [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (int j = 0; j < partition.count(); ++j) {
      const Zone& zone = partition.zones[static_cast<std::size_t>(j)];
      double total = 0.0;
      for (int l = zone.begin; l < zone.end; ++l) {
        total += log_normal_density(y[l], progressed(row, l), m.obs_var[l]);
      }
      out(row, j) = total;
    }
  });
  return out;
}

std::vector<std::vector<double>> zone_resampling_probabilities(
    const ParticleMatrix& zone_log_w) {
  std::vector<std::vector<double>> probs(
      static_cast<std::size_t>(zone_log_w.cols()));
  std::vector<double> column(static_cast<std::size_t>(zone_log_w.rows()));
  for (Eigen::Index j = 0; j < zone_log_w.cols(); ++j) {
    for (Eigen::Index i = 0; i < zone_log_w.rows(); ++i) {
      column[static_cast<std::size_t>(i)] = zone_log_w(i, j);
    }
    try {
      probs[static_cast<std::size_t>(j)] = normalize_log_weights(column);
    } catch (const DegenerateLikelihood& e) {
      throw DegenerateLikelihood("zone " + std::to_string(j) + ": " + e.what());
    }
  }
  return probs;
}

BlockStepResult stitch_zones(const ParticleMatrix& progressed,
                             const std::vector<std::vector<double>>& probs,
                             const ZonePartition& partition, const Rng& rng) {
  const auto particles = static_cast<int>(progressed.rows());
  const int zones = partition.count();
  BlockStepResult result;
  result.ensemble.particles.resize(particles, progressed.cols());
  result.sources.resize(particles, zones);

  std::vector<CategoricalTable> tables;
  tables.reserve(probs.size());
  for (const auto& p : probs) {
    tables.emplace_back(p);
    result.zone_stats.push_back(degeneracy(p));
  }
  parallel_for(static_cast<std::size_t>(particles), [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    for (int j = 0; j < zones; ++j) {
      Rng r = rng.substream(static_cast<std::uint64_t>(j), idx);
      const int src = tables[static_cast<std::size_t>(j)].sample(r);
      result.sources(i, j) = src;
      const Zone& zone = partition.zones[static_cast<std::size_t>(j)];
      for (int l = zone.begin; l < zone.end; ++l) {
        result.ensemble.particles(i, l) = progressed(src, l);
      }
    }
  });
  return result;
}

BlockStepResult block_step(const Ensemble& prior, const Observation& y,
                           const ZonePartition& partition, const ModelSpec& m,
                           const Rng& rng) {
  if (prior.size() < 1) throw InvalidDimension("block_step: empty ensemble");
  const ParticleMatrix progressed =
      progress_ensemble(prior, m, rng.substream(tag::kProgress));
  const auto probs =
      zone_resampling_probabilities(zone_log_weights(progressed, y, partition, m));
  return stitch_zones(progressed, probs, partition,
                      rng.substream(tag::kResample));
}

void run_block_filter(const std::vector<Observation>& observations,
                      const ZonePartition& partition, const ModelSpec& m,
                      int particle_count, const Rng& rng,
                      const BlockObserver& observer) {
  m.validate();
  Ensemble current =
      sample_initial_ensemble(m, particle_count, rng.substream(tag::kInitial));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const int time = static_cast<int>(t) + 1;
    auto step = block_step(current, observations[t], partition, m,
                           rng.substream(tag::kStep, time));
    if (observer) observer(time, step);
    current = std::move(step.ensemble);
  }
}

std::vector<BlockStepResult> block_filter(
    const std::vector<Observation>& observations,
    const ZonePartition& partition, const ModelSpec& m, int particle_count,
    const Rng& rng) {
  std::vector<BlockStepResult> out;
  run_block_filter(observations, partition, m, particle_count, rng,
                   [&](int, const BlockStepResult& s) { out.push_back(s); });
  return out;
}

}  // namespace hdpf
