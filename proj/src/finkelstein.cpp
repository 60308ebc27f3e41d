#include "hdpf/finkelstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdpf/error.hpp"
#include "hdpf/weights.hpp"

namespace hdpf {

std::string to_string(RhoVariant v) {
  switch (v) {
    case RhoVariant::kFull: return "full";
    case RhoVariant::kLocal: return "local";
    case RhoVariant::kSampled: return "sampled";
  }
  return "?";
}

std::string to_string(HistoryWeight g) {
  return g == HistoryWeight::kUniform ? "uniform" : "bentlog";
}

std::string to_string(DenominatorMode d) {
  return d == DenominatorMode::kStoredEta ? "stored" : "fresh";
}

RhoVariant parse_rho_variant(const std::string& s) {
  if (s == "full") return RhoVariant::kFull;
  if (s == "local") return RhoVariant::kLocal;
  if (s == "sampled") return RhoVariant::kSampled;
  throw ConfigError("unknown rho variant '" + s + "'");
}

HistoryWeight parse_history_weight(const std::string& s) {
  if (s == "uniform") return HistoryWeight::kUniform;
  if (s == "bentlog") return HistoryWeight::kBentlog;
  throw ConfigError("unknown history weight '" + s + "'");
}

DenominatorMode parse_denominator_mode(const std::string& s) {
  if (s == "stored" || s == "stored_eta") return DenominatorMode::kStoredEta;
  if (s == "fresh" || s == "fresh_eta") return DenominatorMode::kFreshEta;
  throw ConfigError("unknown denominator mode '" + s + "'");
}

void FinkelsteinConfig::validate() const {
  if (particle_count < 1) throw InvalidDimension("finkelstein: M must be >= 1");
  if (history_count < 1) throw InvalidDimension("finkelstein: H must be >= 1");
  if (radius < 0) throw InvalidDimension("finkelstein: r must be >= 0");
  if (sweeps < 1) throw InvalidDimension("finkelstein: sweeps must be >= 1");
  if (!(g_floor > 0.0)) throw DomainError("finkelstein: g_floor must be > 0");
  if (!(bentlog_a > 0.0) || !(bentlog_b > 0.0)) {
    throw DomainError("finkelstein: bentlog constants must be > 0");
  }
}

NeighborhoodIndex NeighborhoodIndex::make(int locus_count, int radius) {
  if (locus_count < 1 || radius < 0) {
    throw InvalidDimension("NeighborhoodIndex: bad locus count or radius");
  }
  NeighborhoodIndex idx;
  idx.balls.resize(static_cast<std::size_t>(locus_count));
  for (int l = 0; l < locus_count; ++l) {
    for (int k = std::max(0, l - radius);
         k <= std::min(locus_count - 1, l + radius); ++k) {
      idx.balls[static_cast<std::size_t>(l)].push_back(k);
    }
  }
  return idx;
}

double g_uniform(double /*f*/) { return 1.0; }

double g_bentlog(double f, double f_min, double f_max, double a, double b,
                 double floor) {
  if (!(f > 0.0) || !(f_min > 0.0) || !(f_max > 0.0) || !(a > 0.0) ||
      !(b > 0.0) || !(floor > 0.0)) {
    throw DomainError("g_bentlog: arguments must be positive");
  }
  return g_bentlog_log(std::log(f), std::log(f_min), std::log(f_max), a, b,
                       floor);
}

double PrecomputedStep::g_value(int history, int source, int locus) const {
  if (g == HistoryWeight::kUniform) return 1.0;
  const auto l = static_cast<std::size_t>(locus);
  return g_bentlog_log(log_fwd(history, source, locus), log_f_min[l],
                       log_f_max[l], bentlog_a, bentlog_b, g_floor_abs[l]);
}

double PrecomputedStep::log_g_prob(int history, int source, int locus) const {
  if (g == HistoryWeight::kUniform) return -std::log(static_cast<double>(particles));
  return std::log(g_value(history, source, locus) / g_norm(source, locus));
}

int PrecomputedStep::sample_source(int locus, Rng& rng) const {
  const std::span<const double> cdf(
      lik_cdf.data() + static_cast<std::size_t>(locus) * particles,
      static_cast<std::size_t>(particles));
  return sample_cumulative(cdf, rng.uniform());
}

int PrecomputedStep::sample_history(int source, int locus, Rng& rng) const {
  if (g == HistoryWeight::kUniform) {
    return static_cast<int>(rng.uniform_index(static_cast<std::size_t>(particles)));
  }
  const std::size_t base = fwd_index(0, source, locus);
  const double x = rng.uniform() * particles;
  const auto slot = std::min(static_cast<int>(x), particles - 1);
  const auto idx = base + static_cast<std::size_t>(slot);
  return (x - slot) < alias_prob[idx] ? slot : alias_index[idx];
}

namespace {

// Walker/Vose alias table: slot s keeps itself with probability prob[s],
// otherwise yields alias[s].
void build_alias_table(const std::vector<double>& weights, double total,
                       std::span<double> prob, std::span<std::int32_t> alias) {
  const std::size_t n = weights.size();
  std::vector<double> scaled(n);
  std::vector<std::int32_t> small;
  std::vector<std::int32_t> large;
  for (std::size_t s = 0; s < n; ++s) {
    scaled[s] = weights[s] * static_cast<double>(n) / total;
    (scaled[s] < 1.0 ? small : large).push_back(static_cast<std::int32_t>(s));
  }
  while (!small.empty() && !large.empty()) {
    const auto lo = small.back();
    small.pop_back();
    const auto hi = large.back();
    prob[static_cast<std::size_t>(lo)] = scaled[static_cast<std::size_t>(lo)];
    alias[static_cast<std::size_t>(lo)] = hi;
    scaled[static_cast<std::size_t>(hi)] -= 1.0 - scaled[static_cast<std::size_t>(lo)];
    if (scaled[static_cast<std::size_t>(hi)] < 1.0) {
      large.pop_back();
      small.push_back(hi);
    }
  }
  for (auto s : large) {
    prob[static_cast<std::size_t>(s)] = 1.0;
    alias[static_cast<std::size_t>(s)] = s;
  }
  for (auto s : small) {
    prob[static_cast<std::size_t>(s)] = 1.0;
    alias[static_cast<std::size_t>(s)] = s;
  }
}

}  // namespace

PrecomputedStep precompute(const Ensemble& prior, const Observation& y,
                           const ModelSpec& m, const FinkelsteinConfig& cfg,
                           const Rng& rng) {
  if (prior.size() < 1) throw InvalidDimension("precompute: empty ensemble");
  const ParticleMatrix progressed =
      progress_ensemble(prior, m, rng.substream(tag::kProgress));
  return precompute_from(prior, progressed, y, m, cfg);
}

PrecomputedStep precompute_from(const Ensemble& prior,
                                const ParticleMatrix& progressed,
                                const Observation& y, const ModelSpec& m,
                                const FinkelsteinConfig& cfg) {
  const int n = prior.size();
  const int loci = m.locus_count;
  if (n < 1 || prior.dimension() != loci || progressed.rows() != n ||
      progressed.cols() != loci || y.size() != loci) {
    throw InvalidDimension("precompute: dimension mismatch");
  }
  const std::size_t tensor = static_cast<std::size_t>(loci) * n * n;
  const std::size_t tensors = cfg.g == HistoryWeight::kBentlog ? 2 : 1;
  if (tensor * tensors * sizeof(double) > cfg.memory_budget_bytes) {
    throw InvalidDimension(
        "precompute: forward-density tensors need " +
        std::to_string(tensor * tensors * sizeof(double)) +
        " bytes, above the memory budget of " +
        std::to_string(cfg.memory_budget_bytes));
  }

  PrecomputedStep pre;
  pre.particles = n;
  pre.loci = loci;
  pre.g = cfg.g;
  pre.bentlog_a = cfg.bentlog_a;
  pre.bentlog_b = cfg.bentlog_b;
  pre.raw_values = progressed;

  ParticleMatrix history_mean(n, loci);
  for (int j = 0; j < n; ++j) {
    const auto x = prior.particle(j);
    for (int l = 0; l < loci; ++l) history_mean(j, l) = progress_mean_at(x, l, m);
  }

  pre.log_lik.resize(n, loci);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < loci; ++l) {
      pre.log_lik(i, l) = log_normal_density(y[l], progressed(i, l), m.obs_var[l]);
    }
  }

  pre.log_fwd_data.resize(tensor);
  pre.log_mean_fwd.resize(n, loci);
  parallel_for(static_cast<std::size_t>(loci) * n, [&](std::size_t row) {
    const int l = static_cast<int>(row / n);
    const int i = static_cast<int>(row % n);
    const double var = m.novelty_var[l];
    const double norm = -kLogSqrt2Pi - 0.5 * std::log(var);
    const double z = progressed(i, l);
    double* out = pre.log_fwd_data.data() + pre.fwd_index(0, i, l);
    double hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = z - history_mean(j, l);
      out[j] = norm - 0.5 * d * d / var;
      hi = std::max(hi, out[j]);
    }
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(out[j])) {
        throw NumericError("precompute: non-finite forward density at (j=" +
                           std::to_string(j) + ", i=" + std::to_string(i) +
                           ", l=" + std::to_string(l) + ")");
      }
    }
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += std::exp(out[j] - hi);
    pre.log_mean_fwd(i, l) = hi + std::log(total);
  });

  pre.lik_cdf.resize(static_cast<std::size_t>(loci) * n);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (int l = 0; l < loci; ++l) {
    for (int i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = pre.log_lik(i, l);
    std::vector<double> w;
    try {
      w = normalize_log_weights(column);
    } catch (const DegenerateLikelihood& e) {
      throw DegenerateLikelihood("precompute: locus " + std::to_string(l) +
                                 ": " + e.what());
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[static_cast<std::size_t>(i)];
      pre.lik_cdf[static_cast<std::size_t>(l) * n + i] = acc;
    }
  }

  pre.g_norm.resize(n, loci);
  pre.log_f_min.assign(static_cast<std::size_t>(loci), 0.0);
  pre.log_f_max.assign(static_cast<std::size_t>(loci), 0.0);
  pre.g_floor_abs.assign(static_cast<std::size_t>(loci), cfg.g_floor);
  if (cfg.g == HistoryWeight::kUniform) {
    pre.g_norm.setConstant(static_cast<double>(n));
    return pre;
  }

  for (int l = 0; l < loci; ++l) {
    const auto begin = pre.log_fwd_data.begin() +
                       static_cast<std::ptrdiff_t>(pre.fwd_index(0, 0, l));
    const auto [lo, hi] = std::minmax_element(
        begin, begin + static_cast<std::ptrdiff_t>(n) * n);
    const auto ul = static_cast<std::size_t>(l);
    pre.log_f_min[ul] = *lo;
    pre.log_f_max[ul] = *hi;
    const double g_max = (*hi - *lo) / cfg.bentlog_a + cfg.bentlog_b;
    pre.g_floor_abs[ul] = cfg.g_floor * g_max;
  }
  pre.log_fwd_over_g.resize(tensor);
  pre.alias_prob.resize(tensor);
  pre.alias_index.resize(tensor);
  parallel_for(static_cast<std::size_t>(loci) * n, [&](std::size_t row) {
    const int l = static_cast<int>(row / n);
    const int i = static_cast<int>(row % n);
    const std::size_t base = pre.fwd_index(0, i, l);
    std::vector<double> g(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      g[static_cast<std::size_t>(j)] = pre.g_value(j, i, l);
      total += g[static_cast<std::size_t>(j)];
    }
    pre.g_norm(i, l) = total;
    const double log_total = std::log(total);
    for (int j = 0; j < n; ++j) {
      const auto idx = base + static_cast<std::size_t>(j);
      pre.log_fwd_over_g[idx] =
          pre.log_fwd_data[idx] - (std::log(g[static_cast<std::size_t>(j)]) - log_total);
    }
    build_alias_table(g, total, {pre.alias_prob.data() + base, static_cast<std::size_t>(n)},
                      {pre.alias_index.data() + base, static_cast<std::size_t>(n)});
  });
  return pre;
}

ChainState init_chain(const PrecomputedStep& pre, const FinkelsteinConfig& cfg,
                      Rng& rng) {
  ChainState chain;
  chain.history_count = cfg.history_count;
  chain.iota.resize(static_cast<std::size_t>(pre.loci));
  for (int l = 0; l < pre.loci; ++l) {
    chain.iota[static_cast<std::size_t>(l)] = pre.sample_source(l, rng);
  }
  chain.eta.resize(static_cast<std::size_t>(pre.loci) * cfg.history_count);
  if (cfg.rho == RhoVariant::kSampled) {
    for (int l = 0; l < pre.loci; ++l) {
      const int src = chain.iota[static_cast<std::size_t>(l)];
      for (int h = 0; h < cfg.history_count; ++h) {
        chain.eta[static_cast<std::size_t>(l) * cfg.history_count + h] =
            pre.sample_history(src, l, rng);
      }
    }
  }
  return chain;
}

Proposal propose_at(const PrecomputedStep& pre, int lambda,
                    const FinkelsteinConfig& cfg, Rng& rng) {
  Proposal p;
  p.lambda = lambda;
  p.iota_star = pre.sample_source(lambda, rng);
  if (cfg.rho == RhoVariant::kSampled) {
    p.eta_star.resize(static_cast<std::size_t>(cfg.history_count));
    for (auto& h : p.eta_star) h = pre.sample_history(p.iota_star, lambda, rng);
  }
  return p;
}

Proposal propose(const PrecomputedStep& pre, const ChainState& /*chain*/,
                 const FinkelsteinConfig& cfg, Rng& rng) {
  const int lambda =
      static_cast<int>(rng.uniform_index(static_cast<std::size_t>(pre.loci)));
  return propose_at(pre, lambda, cfg, rng);
}

namespace {

std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

double log_sum_exp_prefix(const std::vector<double>& buf, std::size_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, buf[i]);
  if (!std::isfinite(hi)) return hi;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::exp(buf[i] - hi);
  return hi + std::log(total);
}

/// log sum_j prod_{k in loci} f^{j -> src_k}_k, src = iota with lambda
/// replaced by source_at_lambda.
double log_sum_of_products(const PrecomputedStep& pre, std::span<const int> iota,
                           int lambda, int source_at_lambda,
                           std::span<const int> loci) {
  const auto n = static_cast<std::size_t>(pre.particles);
  auto& buf = scratch(n);
  std::fill_n(buf.begin(), n, 0.0);
  for (int k : loci) {
    const int src = (k == lambda) ? source_at_lambda : iota[static_cast<std::size_t>(k)];
    const auto row = pre.log_fwd_row(src, k);
    for (std::size_t j = 0; j < n; ++j) buf[j] += row[j];
  }
  return log_sum_exp_prefix(buf, n);
}

double log_mean_ratio(const PrecomputedStep& pre, const ChainState& chain,
                      const Proposal& p) {
  const int current = chain.iota[static_cast<std::size_t>(p.lambda)];
  return pre.log_mean_fwd(current, p.lambda) -
         pre.log_mean_fwd(p.iota_star, p.lambda);
}

std::vector<int> all_loci(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) v[static_cast<std::size_t>(l)] = l;
  return v;
}

}  // namespace

double log_ht_estimate(const PrecomputedStep& pre, std::span<const int> iota,
                       int lambda, int source_at_lambda,
                       std::span<const int> histories,
                       std::span<const int> ball) {
  const std::size_t h_count = histories.size();
  auto& buf = scratch(h_count);
  const bool uniform = pre.g == HistoryWeight::kUniform;
  // Term at lambda divided by the sampling probability g_lambda(j, source).
  const double* at_lambda =
      (uniform ? pre.log_fwd_data.data() : pre.log_fwd_over_g.data()) +
      pre.fwd_index(0, source_at_lambda, lambda);
  const double offset = uniform ? std::log(static_cast<double>(pre.particles)) : 0.0;
  for (std::size_t h = 0; h < h_count; ++h) buf[h] = at_lambda[histories[h]] + offset;
  for (int k : ball) {
    if (k == lambda) continue;
    const double* row = pre.log_fwd_data.data() +
                        pre.fwd_index(0, iota[static_cast<std::size_t>(k)], k);
    for (std::size_t h = 0; h < h_count; ++h) buf[h] += row[histories[h]];
  }
  return log_sum_exp_prefix(buf, h_count) - std::log(static_cast<double>(h_count));
}

double log_rho_full(const PrecomputedStep& pre, const ChainState& chain,
                    const Proposal& p) {
  const auto loci = all_loci(pre.loci);
  const int current = chain.iota[static_cast<std::size_t>(p.lambda)];
  const double num = log_sum_of_products(pre, chain.iota, p.lambda, p.iota_star, loci);
  const double den = log_sum_of_products(pre, chain.iota, p.lambda, current, loci);
  return num - den + log_mean_ratio(pre, chain, p);
}

double log_rho_local(const PrecomputedStep& pre, const ChainState& chain,
                     const Proposal& p, const NeighborhoodIndex& nbhd) {
  const auto& ball = nbhd.ball(p.lambda);
  const int current = chain.iota[static_cast<std::size_t>(p.lambda)];
  const double num = log_sum_of_products(pre, chain.iota, p.lambda, p.iota_star, ball);
  const double den = log_sum_of_products(pre, chain.iota, p.lambda, current, ball);
  return num - den + log_mean_ratio(pre, chain, p);
}

double log_rho_sampled(const PrecomputedStep& pre, const ChainState& chain,
                       const Proposal& p, const NeighborhoodIndex& nbhd,
                       const FinkelsteinConfig& cfg) {
  const auto& ball = nbhd.ball(p.lambda);
  const int current = chain.iota[static_cast<std::size_t>(p.lambda)];
  const double num =
      log_ht_estimate(pre, chain.iota, p.lambda, p.iota_star, p.eta_star, ball);
  const std::span<const int> den_histories =
      cfg.denominator == DenominatorMode::kStoredEta
          ? chain.eta_row(p.lambda)
          : std::span<const int>(p.eta_star);
  const double den =
      log_ht_estimate(pre, chain.iota, p.lambda, current, den_histories, ball);
  return num - den + log_mean_ratio(pre, chain, p);
}

double log_rho(const PrecomputedStep& pre, const ChainState& chain,
               const Proposal& p, const NeighborhoodIndex& nbhd,
               const FinkelsteinConfig& cfg) {
  switch (cfg.rho) {
    case RhoVariant::kFull: return log_rho_full(pre, chain, p);
    case RhoVariant::kLocal: return log_rho_local(pre, chain, p, nbhd);
    case RhoVariant::kSampled: return log_rho_sampled(pre, chain, p, nbhd, cfg);
  }
  return 0.0;
}

double rho_full(const PrecomputedStep& pre, const ChainState& chain,
                const Proposal& p) {
  return std::exp(log_rho_full(pre, chain, p));
}

double rho_local(const PrecomputedStep& pre, const ChainState& chain,
                 const Proposal& p, const NeighborhoodIndex& nbhd) {
  return std::exp(log_rho_local(pre, chain, p, nbhd));
}

double rho_sampled(const PrecomputedStep& pre, const ChainState& chain,
                   const Proposal& p, const NeighborhoodIndex& nbhd,
                   const FinkelsteinConfig& cfg) {
  return std::exp(log_rho_sampled(pre, chain, p, nbhd, cfg));
}

void apply_proposal(ChainState& chain, const Proposal& p,
                    const FinkelsteinConfig& cfg) {
  chain.iota[static_cast<std::size_t>(p.lambda)] = p.iota_star;
  if (cfg.rho == RhoVariant::kSampled && !p.eta_star.empty()) {
    std::copy(p.eta_star.begin(), p.eta_star.end(),
              chain.eta.begin() + static_cast<std::ptrdiff_t>(p.lambda) *
                                      chain.history_count);
  }
}

bool chain_step(const PrecomputedStep& pre, ChainState& chain,
                const NeighborhoodIndex& nbhd, const FinkelsteinConfig& cfg,
                Rng& rng) {
  const Proposal p = propose(pre, chain, cfg, rng);
  const double lr = log_rho(pre, chain, p, nbhd, cfg);
  if (std::isnan(lr)) throw NumericError("chain_step: acceptance ratio is NaN");
  const bool accept = lr >= 0.0 || std::log(rng.uniform()) < lr;
  ++chain.step;
  if (accept) {
    apply_proposal(chain, p, cfg);
    ++chain.accepted_count;
  }
  return accept;
}

double modal_fraction(std::span<const int> sources) {
  if (sources.empty()) return 0.0;
  std::vector<int> sorted(sources.begin(), sources.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    best = std::max(best, j - i);
    i = j;
  }
  return static_cast<double>(best) / static_cast<double>(sources.size());
}

ChainOutcome run_chain(const PrecomputedStep& pre, const NeighborhoodIndex& nbhd,
                       const FinkelsteinConfig& cfg, Rng& rng) {
  ChainOutcome out;
  out.final_state = init_chain(pre, cfg, rng);
  ChainState& chain = out.final_state;
  out.accepted_per_sweep.assign(static_cast<std::size_t>(std::max(cfg.sweeps, 0)), 0);
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    std::int32_t accepted = 0;
    for (int s = 0; s < pre.loci; ++s) {
      accepted += chain_step(pre, chain, nbhd, cfg, rng) ? 1 : 0;
    }
    out.accepted_per_sweep[static_cast<std::size_t>(sweep)] = accepted;
  }
  out.values.resize(static_cast<std::size_t>(pre.loci));
  for (int l = 0; l < pre.loci; ++l) {
    out.values[static_cast<std::size_t>(l)] =
        pre.raw_values(chain.iota[static_cast<std::size_t>(l)], l);
  }
  out.acceptance_rate =
      chain.step > 0 ? static_cast<double>(chain.accepted_count) / chain.step : 0.0;
  out.modal_history_fraction = modal_fraction(chain.iota);
  return out;
}

double ChainDiagnostics::mean_acceptance() const {
  if (acceptance_rate.empty()) return 0.0;
  double total = 0.0;
  for (double a : acceptance_rate) total += a;
  return total / static_cast<double>(acceptance_rate.size());
}

double ChainDiagnostics::median_modal_fraction() const {
  if (modal_history_fraction.empty()) return 0.0;
  std::vector<double> v = modal_history_fraction;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

FinkelsteinStepResult finkelstein_step(const Ensemble& prior,
                                       const Observation& y, const ModelSpec& m,
                                       const FinkelsteinConfig& cfg,
                                       const Rng& rng) {
  cfg.validate();
  if (prior.size() != cfg.particle_count) {
    throw InvalidDimension("finkelstein_step: ensemble has " +
                           std::to_string(prior.size()) + " particles, config M = " +
                           std::to_string(cfg.particle_count));
  }
  const PrecomputedStep pre = precompute(prior, y, m, cfg, rng);
  const auto nbhd = NeighborhoodIndex::make(m.locus_count, cfg.radius);

  const int chains = cfg.particle_count;
  std::vector<ChainOutcome> outcomes(static_cast<std::size_t>(chains));
  parallel_for(outcomes.size(), [&](std::size_t k) {
    Rng r = rng.substream(tag::kChain, k);
    outcomes[k] = run_chain(pre, nbhd, cfg, r);
  });

  FinkelsteinStepResult result;
  result.ensemble.particles.resize(chains, m.locus_count);
  auto& diag = result.diagnostics;
  diag.sweep_acceptance.assign(static_cast<std::size_t>(cfg.sweeps), 0.0);
  for (int k = 0; k < chains; ++k) {
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    for (int l = 0; l < m.locus_count; ++l) {
      result.ensemble.particles(k, l) = o.values[static_cast<std::size_t>(l)];
    }
    diag.acceptance_rate.push_back(o.acceptance_rate);
    diag.modal_history_fraction.push_back(o.modal_history_fraction);
    for (int s = 0; s < cfg.sweeps; ++s) {
      diag.sweep_acceptance[static_cast<std::size_t>(s)] +=
          static_cast<double>(o.accepted_per_sweep[static_cast<std::size_t>(s)]) /
          (static_cast<double>(m.locus_count) * chains);
    }
  }
  return result;
}

void run_finkelstein_filter(const std::vector<Observation>& observations,
                            const ModelSpec& m, const FinkelsteinConfig& cfg,
                            const Rng& rng,
                            const FinkelsteinObserver& observer) {
  m.validate();
  cfg.validate();
  Ensemble current = sample_initial_ensemble(m, cfg.particle_count,
                                             rng.substream(tag::kInitial));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const int time = static_cast<int>(t) + 1;
    auto step = finkelstein_step(current, observations[t], m, cfg,
                                 rng.substream(tag::kStep, time));
    if (observer) observer(time, step);
    current = std::move(step.ensemble);
  }
}

std::vector<FinkelsteinStepResult> finkelstein_filter(
    const std::vector<Observation>& observations, const ModelSpec& m,
    const FinkelsteinConfig& cfg, const Rng& rng) {
  std::vector<FinkelsteinStepResult> out;
  run_finkelstein_filter(observations, m, cfg, rng,
                         [&](int, const FinkelsteinStepResult& s) { out.push_back(s); });
  return out;
}

}  // namespace hdpf
