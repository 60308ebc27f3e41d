// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "hdpf/block.hpp"
#include "hdpf/bootstrap.hpp"
#include "hdpf/finkelstein.hpp"
#include "hdpf/harness.hpp"
#include "hdpf/kalman.hpp"
#include "support/oracles.hpp"

using namespace hdpf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const Outcome& o, double secs) {
  std::cout << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  ("
            << std::fixed << std::setprecision(1) << secs << " s) " << o.detail << std::endl;
  std::cout.unsetf(std::ios::floatfield);
  if (!o.pass) ++failures;
}

void run(int id, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, o, seconds_since(t0));
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << v;
  return ss.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome oracle_fidelity() {
  const auto t0 = Clock::now();
  const auto m = build_paper_model(2);
  const auto tr = simulate_trajectory(m, 5, Rng(2024));
  const auto beliefs = kalman_filter(tr.observations, m);
  const auto grid = oracle::grid_filter_2d(m, tr.observations);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t)
    for (int l = 0; l < 2; ++l)
      worst = std::max(worst, std::abs(beliefs[static_cast<std::size_t>(t + 1)].mean[l] - grid[static_cast<std::size_t>(t)][l]));
  const double secs = seconds_since(t0);
  return {worst < 2e-2 && secs < 10.0, "max |kalman - grid| = " + fmt(worst) + " (< 0.02)"};
}

ChainState chain_with(std::vector<int> iota, int H) {
  ChainState c;
  c.iota = std::move(iota);
  c.history_count = H;
  c.eta.resize(c.iota.size() * static_cast<std::size_t>(H));
  for (std::size_t k = 0; k < c.eta.size(); ++k) c.eta[k] = static_cast<int>(k % static_cast<std::size_t>(H));
  return c;
}

Outcome reduction_equivalences() {
  const auto t0 = Clock::now();
  // (a) one zone spanning the lattice versus the bootstrap weights.
  bool a_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = build_paper_model(10);
    const Rng rng(100 + static_cast<std::uint64_t>(trial));
    const auto prior = sample_initial_ensemble(m, 500, rng.substream(1));
    const auto progressed = progress_ensemble(prior, m, rng.substream(2));
    const auto y = simulate_trajectory(m, 1, rng.substream(3)).observations[0];
    const auto zone = zone_resampling_probabilities(zone_log_weights(progressed, y, make_partition(10, 10), m));
    a_ok &= zone.size() == 1 && zone[0] == bootstrap_resampling_probabilities(progressed, y, m);
  }
  // (b) and (c) on random tensors.
  Rng rng(7);
  double worst_b = 0.0, worst_c = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int M = 1 + static_cast<int>(rng.uniform_index(5));
    const int L = 1 + static_cast<int>(rng.uniform_index(6));
    const auto pre = oracle::random_pre(M, L, 10.0, rng);
    std::vector<int> iota(static_cast<std::size_t>(L));
    for (auto& v : iota) v = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(M)));
    const int lambda = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(L)));
    const int star = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(M)));

    const auto wide = NeighborhoodIndex::make(L, L - 1);
    const auto chain = chain_with(iota, M);
    const Proposal p{lambda, star, {}};
    const double full = rho_full(pre, chain, p);
    worst_b = std::max(worst_b, std::abs(rho_local(pre, chain, p, wide) / full - 1.0));

    FinkelsteinConfig cfg;
    cfg.particle_count = M;
    cfg.history_count = M;
    cfg.g = HistoryWeight::kUniform;
    const auto nb = NeighborhoodIndex::make(L, 1);
    std::vector<int> all(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) all[static_cast<std::size_t>(j)] = j;
    ChainState exhaustive = chain;
    for (int l = 0; l < L; ++l)
      std::copy(all.begin(), all.end(), exhaustive.eta.begin() + static_cast<std::ptrdiff_t>(l) * M);
    const Proposal ps{lambda, star, all};
    const double local = rho_local(pre, exhaustive, ps, nb);
    worst_c = std::max(worst_c, std::abs(rho_sampled(pre, exhaustive, ps, nb, cfg) / local - 1.0));
  }
  const double secs = seconds_since(t0);
  const bool ok = a_ok && worst_b < 1e-12 && worst_c < 1e-10 && secs < 60.0;
  return {ok, std::string("(a) exact ") + (a_ok ? "yes" : "no") + ", (b) max rel " + fmt(worst_b) +
                  " (< 1e-12), (c) max rel " + fmt(worst_c) + " (< 1e-10)"};
}

Outcome stationary_oracle() {
  const auto t0 = Clock::now();
  ModelSpec m;
  m.locus_count = 1;
  m.diag_coeff = 0.35;
  m.novelty_var = Vector::Constant(1, 1.0);
  m.obs_var = Vector::Constant(1, 0.16);
  m.init_var = 5.0;
  FinkelsteinConfig cfg;
  cfg.particle_count = 4;
  cfg.radius = 0;
  cfg.rho = RhoVariant::kLocal;
  const auto prior = sample_initial_ensemble(m, 4, Rng(31));
  const Observation y = Vector::Constant(1, 0.4);
  const auto pre = precompute(prior, y, m, cfg, Rng(32));
  const auto nb = NeighborhoodIndex::make(1, 0);

  // Local target at the single locus: w_i * sum_j f^{j->i} / sum_j f^{j->i}.
  std::vector<long double> pi(4);
  long double total = 0.0L;
  for (int i = 0; i < 4; ++i) {
    long double s = 0.0L;
    for (int j = 0; j < 4; ++j) s += std::exp(static_cast<long double>(pre.log_fwd(j, i, 0)));
    pi[static_cast<std::size_t>(i)] = std::exp(static_cast<long double>(pre.log_lik(i, 0))) * s / s;
    total += pi[static_cast<std::size_t>(i)];
  }
  Rng rng(33);
  auto chain = init_chain(pre, cfg, rng);
  std::vector<double> freq(4, 0.0);
  const int steps = 1000000;
  for (int s = 0; s < steps; ++s) {
    chain_step(pre, chain, nb, cfg, rng);
    freq[static_cast<std::size_t>(chain.iota[0])] += 1.0;
  }
  double tv = 0.0;
  for (int i = 0; i < 4; ++i)
    tv += 0.5 * std::abs(freq[static_cast<std::size_t>(i)] / steps -
                         static_cast<double>(pi[static_cast<std::size_t>(i)] / total));
  const double secs = seconds_since(t0);
  return {tv < 0.02 && secs < 120.0, "TV = " + fmt(tv) + " (< 0.02)"};
}

// ---------------------------------------------------------------------------
// Shared paper-preset experiment for criteria 4-8.

RunConfig desk_config(int L) {
  RunConfig cfg;
  cfg.locus_count = L;
  cfg.steps = 10;
  cfg.run_count = 5;
  cfg.bootstrap_particles = 1000;
  cfg.block_particles = 32000;
  cfg.zone_size = 3;
  cfg.finkelstein.particle_count = 400;
  cfg.finkelstein.history_count = 45;
  cfg.finkelstein.radius = 1;
  // Both history weights are needed only for the KL stability check.
  if (L == 30) cfg.g_variants = {HistoryWeight::kBentlog, HistoryWeight::kUniform};
  cfg.master_seed = 20240611;
  cfg.validate();
  return cfg;
}

struct Label {
  Algorithm a;
  std::optional<HistoryWeight> g;
};

bool matches(const RunRecord& r, const Label& l) {
  return r.algorithm == l.a && (l.a != Algorithm::kFinkelstein || r.g == l.g);
}

const Label kBoot{Algorithm::kBootstrap, std::nullopt};
const Label kBlock{Algorithm::kBlock, std::nullopt};
const Label kFink{Algorithm::kFinkelstein, HistoryWeight::kBentlog};
const Label kFinkUniform{Algorithm::kFinkelstein, HistoryWeight::kUniform};

double mean_sq_err(const ExperimentResult& res, const Label& l) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : res.runs) {
    if (!matches(r, l)) continue;
    for (const auto& st : r.steps) {
      s += st.metrics.per_locus_sq_err.sum();
      n += static_cast<int>(st.metrics.per_locus_sq_err.size());
    }
  }
  return s / n;
}

const ExperimentResult& experiment(int L) {
  static std::map<int, ExperimentResult> cache;
  auto it = cache.find(L);
  if (it == cache.end()) it = cache.emplace(L, run_experiment(desk_config(L))).first;
  return it->second;
}

Outcome degeneracy_demo() {
  const auto& res = experiment(30);
  std::vector<double> max_w;
  for (const auto& r : res.runs)
    if (matches(r, kBoot))
      for (const auto& st : r.steps) max_w.push_back(st.degeneracy.max_weight);
  const double med = median(max_w);
  const double boot = mean_sq_err(res, kBoot);
  const double fink = mean_sq_err(res, kFink);
  const double block = mean_sq_err(res, kBlock);
  const bool ok = med > 0.5 && fink * 5.0 <= boot && block * 5.0 <= boot;
  return {ok, "bootstrap median max weight " + fmt(med) + " (> 0.5); MSE bootstrap " + fmt(boot) +
                  ", finkelstein " + fmt(fink) + ", block " + fmt(block) + " (both <= bootstrap/5)"};
}

Outcome variance_fidelity() {
  const auto& res = experiment(30);
  auto ratio = [&](const Label& l) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : res.runs) {
      if (!matches(r, l)) continue;
      for (const auto& st : r.steps) {
        s += st.metrics.variance_ratio.sum();
        n += static_cast<int>(st.metrics.variance_ratio.size());
      }
    }
    return s / n;
  };
  const double f = ratio(kFink), b = ratio(kBlock);
  const auto inside = [](double v) { return v >= 0.94 && v <= 1.06; };
  return {inside(f) && inside(b),
          "variance ratio finkelstein " + fmt(f) + ", block " + fmt(b) + " (in [0.94, 1.06])"};
}

// Per (run, zone) pairs of time-averaged squared error: mean over the
// zone's peripheral loci minus its central locus. The two lattice ends are
// left out because they have no neighbour across a zone boundary.
std::vector<double> zone_gaps(const ExperimentResult& res, const Label& l) {
  const int L = res.config.locus_count;
  const auto partition = make_partition(L, res.config.zone_size);
  const auto classes = classify_loci(partition);
  std::vector<double> gaps;
  for (const auto& r : res.runs) {
    if (!matches(r, l)) continue;
    Vector mse = Vector::Zero(L);
    for (const auto& st : r.steps) mse += st.metrics.per_locus_sq_err;
    mse /= static_cast<double>(r.steps.size());
    for (const auto& z : partition.zones) {
      double central = 0.0, peripheral = 0.0;
      int nc = 0, np = 0;
      for (int k = z.begin; k < z.end; ++k) {
        if (classes[static_cast<std::size_t>(k)] == LocusClass::kZoneCentral) {
          central += mse[k];
          ++nc;
        } else if (k != 0 && k != L - 1) {
          peripheral += mse[k];
          ++np;
        }
      }
      if (nc == 1 && np > 0) gaps.push_back(peripheral / np - central);
    }
  }
  return gaps;
}

Outcome bias_structure() {
  const auto& res = experiment(30);
  const auto block = oracle::paired_t(zone_gaps(res, kBlock));
  const auto fink = oracle::paired_t(zone_gaps(res, kFink));
  const bool ok = block.p_greater < 0.05 && fink.p_two_sided >= 0.05;
  return {ok, "block peripheral-central gap " + fmt(block.mean) + " one-sided p " + fmt(block.p_greater) +
                  " (< 0.05); finkelstein gap " + fmt(fink.mean) + " two-sided p " +
                  fmt(fink.p_two_sided) + " (>= 0.05)"};
}

Outcome temporal_stability() {
  const auto& res = experiment(30);
  bool ok = true;
  std::string detail;
  for (const auto& l : {kFinkUniform, kFink}) {
    std::vector<double> kl(10, 0.0);
    int runs = 0;
    for (const auto& r : res.runs) {
      if (!matches(r, l)) continue;
      ++runs;
      for (std::size_t t = 0; t < r.steps.size(); ++t) kl[t] += r.steps[t].metrics.kl_divergence;
    }
    for (auto& v : kl) v /= runs;
    const double med = median(std::vector<double>(kl.begin() + 1, kl.begin() + 9));
    ok &= kl[9] <= 2.0 * med;
    detail += to_string(*l.g) + " KL(t=10) " + fmt(kl[9]) + " vs 2 x median(t=2..9) " + fmt(2.0 * med) + "; ";
  }
  return {ok, detail};
}

Outcome dimension_robustness() {
  const auto& r30 = experiment(30);
  const auto& r90 = experiment(90);
  auto change = [&](const Label& l) { return mean_sq_err(r90, l) / mean_sq_err(r30, l); };
  const double f = change(kFink), b = change(kBlock), boot = change(kBoot);
  const bool ok = std::abs(f - 1.0) < 0.5 && std::abs(b - 1.0) < 0.5 && boot > 2.0;
  return {ok, "MSE ratio L=90/L=30: finkelstein " + fmt(f) + ", block " + fmt(b) +
                  " (within 1 +- 0.5); bootstrap " + fmt(boot) + " (> 2)"};
}

// ---------------------------------------------------------------------------

struct StepTiming {
  double full = 0.0;
  double chains = 0.0;
};

// Best of two single-threaded Finkelstein steps: whole step, and the chain
// phase alone with the tables already built.
StepTiming time_step(int L, int H) {
  const auto m = build_paper_model(L);
  FinkelsteinConfig cfg;
  cfg.history_count = H;
  const auto y = simulate_trajectory(m, 1, Rng(41)).observations[0];
  const auto prior = sample_initial_ensemble(m, cfg.particle_count, Rng(42));
  StepTiming best{1e300, 1e300};
  for (int rep = 0; rep < 2; ++rep) {
    const Rng rng(43);
    const auto t0 = Clock::now();
    const auto pre = precompute(prior, y, m, cfg, rng);
    const auto nb = NeighborhoodIndex::make(L, cfg.radius);
    const auto t1 = Clock::now();
    for (int k = 0; k < cfg.particle_count; ++k) {
      Rng r = rng.substream(tag::kChain, static_cast<std::uint64_t>(k));
      (void)run_chain(pre, nb, cfg, r);
    }
    best.full = std::min(best.full, seconds_since(t0));
    best.chains = std::min(best.chains, seconds_since(t1));
  }
  return best;
}

Outcome scaling_law() {
  const int saved = worker_count();
  set_worker_count(1);
  std::map<int, StepTiming> by_h, by_l;
  for (int H : {10, 45, 90}) by_h[H] = time_step(30, H);
  by_l[30] = by_h[45];
  for (int L : {60, 90}) by_l[L] = time_step(L, 45);
  set_worker_count(saved);

  bool ok = true;
  std::string detail = "chain-phase cost per unit, relative to H=45 / L=30 (in [0.5, 2]):";
  auto check = [&](const std::string& name, int v, double t, int v_ref, double t_ref, double full,
                   double full_ref) {
    const double rel = (t / v) / (t_ref / v_ref);
    ok &= rel >= 0.5 && rel <= 2.0;
    detail += " " + name + "=" + std::to_string(v) + " " + fmt(rel) + " [whole step " +
              fmt((full / v) / (full_ref / v_ref)) + "]";
  };
  for (int H : {10, 90}) check("H", H, by_h[H].chains, 45, by_h[45].chains, by_h[H].full, by_h[45].full);
  for (int L : {60, 90}) check("L", L, by_l[L].chains, 30, by_l[30].chains, by_l[L].full, by_l[30].full);
  return {ok, detail};
}

std::map<std::string, std::string> csv_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "hdpf_acceptance_determinism";
  fs::remove_all(root);
  std::string detail;
  std::vector<std::map<std::string, std::string>> outputs;
  for (int threads : {1, 8}) {
    const fs::path out = root / ("threads" + std::to_string(threads));
    const std::string cmd = std::string(HDPF_CLI) + " reproduce-paper --seed 20240611 --threads " +
                            std::to_string(threads) + " --out " + out.string() + " > /dev/null";
    const auto t0 = Clock::now();
    if (std::system(cmd.c_str()) != 0) return {false, "reproduce-paper failed with " + std::to_string(threads) + " threads"};
    detail += "threads " + std::to_string(threads) + ": " + fmt(seconds_since(t0)) + " s; ";
    outputs.push_back(csv_bytes(out));
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  // Second run at one thread against the first.
  const fs::path again = root / "again";
  const std::string cmd = std::string(HDPF_CLI) + " reproduce-paper --seed 20240611 --threads 1 --out " +
                          again.string() + " > /dev/null";
  const bool rerun = std::system(cmd.c_str()) == 0 && csv_bytes(again) == outputs[0];
  fs::remove_all(root);
  return {same && rerun, std::to_string(outputs[0].size()) + " CSV files; identical across threads: " +
                             (same ? "yes" : "no") + ", across runs: " + (rerun ? "yes" : "no") + "; " + detail};
}

}  // namespace

int main() {
  std::cout << "acceptance run, " << worker_count() << " worker threads" << std::endl;
  run(1, oracle_fidelity);
  run(2, reduction_equivalences);
  run(3, stationary_oracle);
  run(4, degeneracy_demo);
  run(5, variance_fidelity);
  run(6, bias_structure);
  run(7, temporal_stability);
  run(8, dimension_robustness);
  run(9, scaling_law);
  run(10, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
