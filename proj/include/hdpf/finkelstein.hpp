#pragma once

// Hybrid-particle filter driven by per-particle Metropolis-Hastings chains.
//
// Every prior particle (a "history") is progressed once, giving a candidate
// value per locus. Each output particle is then assembled by an MCMC over
// the vector of source indices iota, one entry per locus: a move picks a
// locus, proposes a new source in proportion to the local likelihood, and
// accepts with a ratio built from forward densities f(z_l^i | x^j) of the
// candidates given the histories.
//
// Three acceptance ratios are available:
//   full    - sum over histories of the product over all loci;
//   local   - the product restricted to the ball B_r(lambda);
//   sampled - the local ratio with both sums replaced by Horvitz-Thompson
//             estimates over H sampled histories, kept per locus in eta.
// All of them carry the mean forward density ratio at the proposed locus.
//
// Indices are 0-based throughout.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdpf/ensemble.hpp"
#include "hdpf/model.hpp"
#include "hdpf/random.hpp"

namespace hdpf {

enum class RhoVariant { kFull, kLocal, kSampled };
enum class HistoryWeight { kUniform, kBentlog };
enum class DenominatorMode { kStoredEta, kFreshEta };

std::string to_string(RhoVariant v);
std::string to_string(HistoryWeight g);
std::string to_string(DenominatorMode d);
RhoVariant parse_rho_variant(const std::string& s);
HistoryWeight parse_history_weight(const std::string& s);
DenominatorMode parse_denominator_mode(const std::string& s);

struct FinkelsteinConfig {
  int particle_count = 400;
  int history_count = 45;
  int radius = 1;
  /// MCMC length per chain is sweeps * L steps.
  int sweeps = 20;
  RhoVariant rho = RhoVariant::kSampled;
  HistoryWeight g = HistoryWeight::kBentlog;
  double bentlog_a = 5.0;
  double bentlog_b = 5.0;
  DenominatorMode denominator = DenominatorMode::kStoredEta;
  /// History weights are floored at g_floor times the per-locus maximum.
  double g_floor = 1e-12;
  /// Upper bound on the precomputed tensors, in bytes.
  std::size_t memory_budget_bytes = std::size_t{3} << 30;

  void validate() const;
};

/// Ordered balls B_r(l) = {k : |k - l| <= r} on the 1-D lattice.
struct NeighborhoodIndex {
  std::vector<std::vector<int>> balls;

  static NeighborhoodIndex make(int locus_count, int radius);
  const std::vector<int>& ball(int locus) const {
    return balls[static_cast<std::size_t>(locus)];
  }
};

double g_uniform(double f);

/// max(floor, (log f - log f_min)/a + max(0, log f - log f_max + b)).
/// Throws DomainError for non-positive arguments.
double g_bentlog(double f, double f_min, double f_max, double a, double b,
                 double floor);

/// g_bentlog on log-densities, without argument checks.
inline double g_bentlog_log(double log_f, double log_f_min, double log_f_max,
                            double a, double b, double floor) {
  const double bent = log_f - log_f_max + b;
  const double g = (log_f - log_f_min) / a + (bent > 0.0 ? bent : 0.0);
  return g > floor ? g : floor;
}

/// Everything the chains read; immutable once built and shared by all chains.
struct PrecomputedStep {
  int particles = 0;
  int loci = 0;
  HistoryWeight g = HistoryWeight::kUniform;
  double bentlog_a = 5.0;
  double bentlog_b = 5.0;

  ParticleMatrix raw_values;     // z~(i, l)
  ParticleMatrix log_lik;        // log w(i, l)
  ParticleMatrix log_mean_fwd;   // log sum_j f^{j->i}_l, indexed (i, l)
  /// log f^{j->i}_l stored at ((l * M + i) * M + j).
  std::vector<double> log_fwd_data;
  /// Per-locus cumulative likelihood weights over sources, at (l * M + i).
  std::vector<double> lik_cdf;
  /// Bentlog only, same layout as log_fwd_data: log f^{j->i}_l minus
  /// log g_l(j, i), and a Walker alias table over histories j per (l, i).
  std::vector<double> log_fwd_over_g;
  std::vector<double> alias_prob;
  std::vector<std::int32_t> alias_index;
  ParticleMatrix g_norm;         // sum_k g(f^{k->i}_l), indexed (i, l)
  std::vector<double> log_f_min;  // per locus, over all (j, i)
  std::vector<double> log_f_max;
  std::vector<double> g_floor_abs;  // per locus

  std::size_t fwd_index(int history, int source, int locus) const {
    return (static_cast<std::size_t>(locus) * particles + source) * particles +
           history;
  }
  double log_fwd(int history, int source, int locus) const {
    return log_fwd_data[fwd_index(history, source, locus)];
  }
  std::span<const double> log_fwd_row(int source, int locus) const {
    return {log_fwd_data.data() + fwd_index(0, source, locus),
            static_cast<std::size_t>(particles)};
  }

  /// Floored g(f^{j->i}_l).
  double g_value(int history, int source, int locus) const;
  /// log g_l(j, i) = log(g(f^{j->i}_l) / sum_k g(f^{k->i}_l)).
  double log_g_prob(int history, int source, int locus) const;

  int sample_source(int locus, Rng& rng) const;
  int sample_history(int source, int locus, Rng& rng) const;
};

/// Progresses the prior once and fills every table. Throws NumericError
/// naming (j, i, l) for a non-finite forward density, InvalidDimension if
/// the tensors would exceed cfg.memory_budget_bytes.
PrecomputedStep precompute(const Ensemble& prior, const Observation& y,
                           const ModelSpec& m, const FinkelsteinConfig& cfg,
                           const Rng& rng);

/// Same tables from already-progressed values; `prior` supplies the histories.
PrecomputedStep precompute_from(const Ensemble& prior,
                                const ParticleMatrix& progressed,
                                const Observation& y, const ModelSpec& m,
                                const FinkelsteinConfig& cfg);

struct ChainState {
  std::vector<int> iota;  // source index per locus
  std::vector<int> eta;   // L x H history indices, row-major
  int history_count = 0;
  std::int64_t step = 0;
  std::int64_t accepted_count = 0;

  int eta_at(int locus, int h) const {
    return eta[static_cast<std::size_t>(locus) * history_count + h];
  }
  std::span<const int> eta_row(int locus) const {
    return {eta.data() + static_cast<std::size_t>(locus) * history_count,
            static_cast<std::size_t>(history_count)};
  }
};

struct Proposal {
  int lambda = 0;
  int iota_star = 0;
  std::vector<int> eta_star;
};

/// iota^0 ~ w per locus; eta^0 ~ g given iota^0 per cell.
ChainState init_chain(const PrecomputedStep& pre, const FinkelsteinConfig& cfg,
                      Rng& rng);

/// lambda uniform, iota* ~ w at lambda, eta* iid ~ g given iota* (sampled
/// variant only).
Proposal propose(const PrecomputedStep& pre, const ChainState& chain,
                 const FinkelsteinConfig& cfg, Rng& rng);
/// As `propose` with the locus fixed.
Proposal propose_at(const PrecomputedStep& pre, int lambda,
                    const FinkelsteinConfig& cfg, Rng& rng);

double log_rho_full(const PrecomputedStep& pre, const ChainState& chain,
                    const Proposal& proposal);
double log_rho_local(const PrecomputedStep& pre, const ChainState& chain,
                     const Proposal& proposal, const NeighborhoodIndex& nbhd);
double log_rho_sampled(const PrecomputedStep& pre, const ChainState& chain,
                       const Proposal& proposal, const NeighborhoodIndex& nbhd,
                       const FinkelsteinConfig& cfg);
/// Dispatches on cfg.rho.
double log_rho(const PrecomputedStep& pre, const ChainState& chain,
               const Proposal& proposal, const NeighborhoodIndex& nbhd,
               const FinkelsteinConfig& cfg);

double rho_full(const PrecomputedStep& pre, const ChainState& chain,
                const Proposal& proposal);
double rho_local(const PrecomputedStep& pre, const ChainState& chain,
                 const Proposal& proposal, const NeighborhoodIndex& nbhd);
double rho_sampled(const PrecomputedStep& pre, const ChainState& chain,
                   const Proposal& proposal, const NeighborhoodIndex& nbhd,
                   const FinkelsteinConfig& cfg);

/// Horvitz-Thompson estimate, in log space, of the local sum of products
/// sum_j prod_{k in ball} f^{j -> src_k}_k where src equals `iota` except at
/// `lambda`, which takes `source_at_lambda`. `histories` are draws from
/// g_lambda(., source_at_lambda); the estimate includes the 1/H factor.
double log_ht_estimate(const PrecomputedStep& pre, std::span<const int> iota,
                       int lambda, int source_at_lambda,
                       std::span<const int> histories,
                       std::span<const int> ball);

/// Applies an accepted proposal to the chain state.
void apply_proposal(ChainState& chain, const Proposal& proposal,
                    const FinkelsteinConfig& cfg);

/// One MH step in place. Returns true on acceptance.
bool chain_step(const PrecomputedStep& pre, ChainState& chain,
                const NeighborhoodIndex& nbhd, const FinkelsteinConfig& cfg,
                Rng& rng);

struct ChainOutcome {
  std::vector<double> values;   // z_l = z~(iota^S_l, l)
  ChainState final_state;
  std::vector<std::int32_t> accepted_per_sweep;
  double acceptance_rate = 0.0;
  /// Share of loci whose final source is the chain's most common source.
  double modal_history_fraction = 0.0;
};

ChainOutcome run_chain(const PrecomputedStep& pre, const NeighborhoodIndex& nbhd,
                       const FinkelsteinConfig& cfg, Rng& rng);

/// Share of entries equal to the most frequent value.
double modal_fraction(std::span<const int> sources);

struct ChainDiagnostics {
  std::vector<double> acceptance_rate;          // per chain
  std::vector<double> modal_history_fraction;   // per chain
  std::vector<double> sweep_acceptance;         // mean over chains, per sweep

  double mean_acceptance() const;
  double median_modal_fraction() const;
};

struct FinkelsteinStepResult {
  Ensemble ensemble;
  ChainDiagnostics diagnostics;
};

FinkelsteinStepResult finkelstein_step(const Ensemble& prior,
                                       const Observation& y, const ModelSpec& m,
                                       const FinkelsteinConfig& cfg,
                                       const Rng& rng);

using FinkelsteinObserver =
    std::function<void(int, const FinkelsteinStepResult&)>;

void run_finkelstein_filter(const std::vector<Observation>& observations,
                            const ModelSpec& m, const FinkelsteinConfig& cfg,
                            const Rng& rng,
                            const FinkelsteinObserver& observer);

std::vector<FinkelsteinStepResult> finkelstein_filter(
    const std::vector<Observation>& observations, const ModelSpec& m,
    const FinkelsteinConfig& cfg, const Rng& rng);

}  // namespace hdpf
