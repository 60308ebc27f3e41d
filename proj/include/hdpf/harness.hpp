#pragma once

// Experiment configuration, execution and CSV emission behind the CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdpf/bootstrap.hpp"
#include "hdpf/finkelstein.hpp"
#include "hdpf/kalman.hpp"
#include "hdpf/metrics.hpp"
#include "hdpf/model.hpp"

namespace hdpf {

enum class Algorithm { kBootstrap, kBlock, kFinkelstein };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct EmitFlags {
  bool trace = true;
  bool sqerr = true;
  bool kl = true;
  bool degeneracy = true;
  bool variance = true;
  bool chains = true;
};

struct RunConfig {
  std::string preset;  // empty when none was applied
  int locus_count = 30;
  int steps = 10;
  int low_obs_var_stride = 4;

  std::vector<Algorithm> algorithms{Algorithm::kBootstrap, Algorithm::kBlock,
                                    Algorithm::kFinkelstein};
  int bootstrap_particles = 160000;
  ResamplingScheme bootstrap_resampling = ResamplingScheme::kMultinomial;
  int block_particles = 32000;
  int zone_size = 3;
  FinkelsteinConfig finkelstein;
  /// Finkelstein runs once per entry.
  std::vector<HistoryWeight> g_variants{HistoryWeight::kBentlog};

  int run_count = 5;
  std::uint64_t master_seed = 20240611;
  std::string output_dir = "out";
  EmitFlags emit;
  int trace_from = 2;  // 0-based, inclusive
  int trace_to = 4;

  /// Throws ConfigError naming the offending key path.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Overwrites the fields present in `j`. Unknown keys and type mismatches
/// throw ConfigError with the key path.
void apply_json(RunConfig& cfg, const nlohmann::json& j, const std::string& path = "");

/// Defaults with a named preset applied: figure3, figure4 or figure5.
RunConfig preset_config(const std::string& name);

/// Layers defaults, preset, config file and flag overrides, in that order,
/// then validates. A manifest is accepted as a config file. The preset is
/// taken from the overrides if given there, else from the file.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const nlohmann::json& overrides);

/// Parses a JSON document from disk, throwing ConfigError on failure.
nlohmann::json read_json_file(const std::filesystem::path& path);

struct StepRecord {
  MetricsRecord metrics;
  Vector mean;
  bool has_degeneracy = false;
  DegeneracyStats degeneracy;  // zone average for the block filter
  bool has_chains = false;
  ChainDiagnostics chains;
};

struct RunRecord {
  Algorithm algorithm = Algorithm::kBootstrap;
  std::optional<HistoryWeight> g;
  int run = 0;
  std::vector<StepRecord> steps;  // times 1..T
  double wall_seconds = 0.0;

  std::string g_label() const;
};

struct ExperimentResult {
  RunConfig config;
  Trajectory trajectory;
  std::vector<GaussianBelief> beliefs;  // T + 1 entries
  std::vector<RunRecord> runs;
  double trajectory_seconds = 0.0;
  double kalman_seconds = 0.0;
};

/// Stable id per (algorithm, g variant) used in sub-seed derivation.
std::uint64_t algorithm_stream_id(Algorithm a, std::optional<HistoryWeight> g);

/// Trajectory stream for a master seed.
Rng trajectory_rng(std::uint64_t master_seed);
/// Filter stream for run r of one algorithm.
Rng run_rng(std::uint64_t master_seed, int run, Algorithm a,
            std::optional<HistoryWeight> g);

/// Runs the Kalman oracle and every configured algorithm R times on one
/// shared trajectory, simulated from the master seed unless given.
ExperimentResult run_experiment(const RunConfig& cfg,
                                const std::optional<Trajectory>& given = std::nullopt);

/// Writes the requested CSVs and manifest.json to cfg.output_dir. Returns
/// the paths written.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& result);

/// run_experiment + write_outputs. On failure every file this call created
/// is removed before the exception propagates.
ExperimentResult run_and_write(const RunConfig& cfg,
                               const std::optional<Trajectory>& given = std::nullopt);

/// trajectory.csv (time, locus, truth, observation) and trajectory.json.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory,
                      const RunConfig& cfg);

struct StoredTrajectory {
  Trajectory trajectory;
  int locus_count = 0;
  int low_obs_var_stride = 4;
  std::uint64_t seed = 0;
};

/// Reads a directory (or trajectory.csv path) written by write_trajectory.
StoredTrajectory read_trajectory(const std::filesystem::path& where);

/// Sweeps L or H over `values`, writing one sub-directory per value plus
/// sweep.csv with per-value averages.
void run_sweep(const RunConfig& base, const std::string& parameter,
               const std::vector<int>& values);

/// Runs figure3, figure4 and figure5 into sub-directories of base.output_dir.
/// `overrides` is re-applied on top of each preset.
void reproduce_paper(const RunConfig& base, const nlohmann::json& overrides);

/// Average over runs, steps and loci per (algorithm, g) label.
struct Summary {
  std::string algorithm;
  std::string g_variant;
  double mean_sq_err = 0.0;
  double mean_kl = 0.0;
  double mean_variance_ratio = 0.0;
};
std::vector<Summary> summarize(const ExperimentResult& result);

}  // namespace hdpf
