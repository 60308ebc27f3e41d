#include "hdpf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "hdpf/block.hpp"
#include "hdpf/csv.hpp"
#include "hdpf/error.hpp"

namespace hdpf {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBootstrap: return "bootstrap";
    case Algorithm::kBlock: return "block";
    case Algorithm::kFinkelstein: return "finkelstein";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "bootstrap") return Algorithm::kBootstrap;
  if (s == "block") return Algorithm::kBlock;
  if (s == "finkelstein") return Algorithm::kFinkelstein;
  throw ConfigError("unknown algorithm '" + s + "'");
}

namespace {

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads one JSON object, remembering which keys were consumed so that the
// rest can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError((path_.empty() ? std::string("config") : path_) +
                        ": expected an object");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
      const auto wide = v->get<std::int64_t>();
      if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
        throw ConfigError(path(key) + ": integer out of range");
      }
      out = static_cast<int>(wide);
    }
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (v->is_number_unsigned()) {
        out = v->get<std::uint64_t>();
      } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
        out = static_cast<std::uint64_t>(v->get<std::int64_t>());
      } else {
        throw ConfigError(path(key) + ": expected a non-negative integer");
      }
    }
  }
  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  template <class Parse, class T>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    if (find(key) == nullptr) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const Error& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  // A string or an array of strings.
  template <class Parse, class T>
  void read_list(const std::string& key, std::vector<T>& out, Parse parse) {
    const json* v = find(key);
    if (v == nullptr) return;
    std::vector<std::string> items;
    if (v->is_string()) {
      items.push_back(v->get<std::string>());
    } else if (v->is_array()) {
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(path(key) + ": expected strings");
        items.push_back(e.get<std::string>());
      }
    } else {
      throw ConfigError(path(key) + ": expected a string or a list of strings");
    }
    out.clear();
    for (const auto& s : items) {
      try {
        out.push_back(parse(s));
      } catch (const Error& e) {
        throw ConfigError(path(key) + ": " + e.what());
      }
    }
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown key \"" + join_path(path_, item.key()) + "\"");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void with_section(Section& parent, const std::string& key, F body) {
  if (const json* v = parent.find(key)) {
    Section s(*v, parent.path(key));
    body(s);
    s.finish();
  }
}

template <class T>
bool has_duplicates(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError("constraint violation: " + key + " " + what);
  };
  if (locus_count < 2) fail("model.L", "must be >= 2");
  if (steps < 1) fail("model.T", "must be >= 1");
  if (low_obs_var_stride < 1) fail("model.stride", "must be >= 1");
  if (algorithms.empty()) fail("algorithms", "must not be empty");
  if (has_duplicates(algorithms)) fail("algorithms", "must not repeat");
  // Covariance metrics need two particles.
  if (bootstrap_particles < 2) fail("bootstrap.M", "must be >= 2");
  if (block_particles < 2) fail("block.M", "must be >= 2");
  if (zone_size < 1 || zone_size > locus_count) fail("block.zone_size", "must lie in [1, L]");
  if (finkelstein.particle_count < 2) fail("finkelstein.M", "must be >= 2");
  if (finkelstein.history_count < 1) fail("finkelstein.H", "must be >= 1");
  if (finkelstein.radius < 0) fail("finkelstein.r", "must be >= 0");
  if (finkelstein.sweeps < 1) fail("finkelstein.sweeps", "must be >= 1");
  if (!(finkelstein.bentlog_a > 0.0)) fail("finkelstein.a", "must be > 0");
  if (!(finkelstein.bentlog_b > 0.0)) fail("finkelstein.b", "must be > 0");
  if (!(finkelstein.g_floor > 0.0)) fail("finkelstein.g_floor", "must be > 0");
  if (g_variants.empty()) fail("finkelstein.g", "must not be empty");
  if (has_duplicates(g_variants)) fail("finkelstein.g", "must not repeat");
  if (run_count < 1) fail("runs", "must be >= 1");
  if (output_dir.empty()) fail("out", "must not be empty");
  if (trace_from < 0 || trace_to >= locus_count || trace_from > trace_to) {
    fail("trace", "range must satisfy 0 <= from <= to < L");
  }
}

json to_json(const RunConfig& cfg) {
  json algos = json::array();
  for (auto a : cfg.algorithms) algos.push_back(to_string(a));
  json gs = json::array();
  for (auto g : cfg.g_variants) gs.push_back(to_string(g));
  const auto& f = cfg.finkelstein;
  return json{
      {"preset", cfg.preset},
      {"model", {{"L", cfg.locus_count}, {"T", cfg.steps}, {"stride", cfg.low_obs_var_stride}}},
      {"algorithms", algos},
      {"bootstrap",
       {{"M", cfg.bootstrap_particles},
        {"resampling", cfg.bootstrap_resampling == ResamplingScheme::kSystematic
                           ? "systematic"
                           : "multinomial"}}},
      {"block", {{"M", cfg.block_particles}, {"zone_size", cfg.zone_size}}},
      {"finkelstein",
       {{"M", f.particle_count},
        {"H", f.history_count},
        {"r", f.radius},
        {"sweeps", f.sweeps},
        {"rho", to_string(f.rho)},
        {"g", gs},
        {"a", f.bentlog_a},
        {"b", f.bentlog_b},
        {"denominator", to_string(f.denominator)},
        {"g_floor", f.g_floor},
        {"memory_budget_bytes", static_cast<std::uint64_t>(f.memory_budget_bytes)}}},
      {"runs", cfg.run_count},
      {"seed", cfg.master_seed},
      {"out", cfg.output_dir},
      {"emit",
       {{"trace", cfg.emit.trace},
        {"sqerr", cfg.emit.sqerr},
        {"kl", cfg.emit.kl},
        {"degeneracy", cfg.emit.degeneracy},
        {"variance", cfg.emit.variance},
        {"chains", cfg.emit.chains}}},
      {"trace", {{"from", cfg.trace_from}, {"to", cfg.trace_to}}},
  };
}

void apply_json(RunConfig& cfg, const json& j, const std::string& path) {
  Section root(j, path);
  root.read("preset", cfg.preset);
  with_section(root, "model", [&](Section& s) {
    s.read("L", cfg.locus_count);
    s.read("T", cfg.steps);
    s.read("stride", cfg.low_obs_var_stride);
  });
  root.read_list("algorithms", cfg.algorithms, parse_algorithm);
  with_section(root, "bootstrap", [&](Section& s) {
    s.read("M", cfg.bootstrap_particles);
    s.read_enum("resampling", cfg.bootstrap_resampling, [](const std::string& v) {
      if (v == "multinomial") return ResamplingScheme::kMultinomial;
      if (v == "systematic") return ResamplingScheme::kSystematic;
      throw ConfigError("unknown resampling scheme '" + v + "'");
    });
  });
  with_section(root, "block", [&](Section& s) {
    s.read("M", cfg.block_particles);
    s.read("zone_size", cfg.zone_size);
  });
  with_section(root, "finkelstein", [&](Section& s) {
    auto& f = cfg.finkelstein;
    s.read("M", f.particle_count);
    s.read("H", f.history_count);
    s.read("r", f.radius);
    s.read("sweeps", f.sweeps);
    s.read_enum("rho", f.rho, parse_rho_variant);
    s.read_list("g", cfg.g_variants, parse_history_weight);
    s.read("a", f.bentlog_a);
    s.read("b", f.bentlog_b);
    s.read_enum("denominator", f.denominator, parse_denominator_mode);
    s.read("g_floor", f.g_floor);
    std::uint64_t budget = f.memory_budget_bytes;
    s.read("memory_budget_bytes", budget);
    f.memory_budget_bytes = static_cast<std::size_t>(budget);
  });
  root.read("runs", cfg.run_count);
  root.read("seed", cfg.master_seed);
  root.read("out", cfg.output_dir);
  with_section(root, "emit", [&](Section& s) {
    s.read("trace", cfg.emit.trace);
    s.read("sqerr", cfg.emit.sqerr);
    s.read("kl", cfg.emit.kl);
    s.read("degeneracy", cfg.emit.degeneracy);
    s.read("variance", cfg.emit.variance);
    s.read("chains", cfg.emit.chains);
  });
  with_section(root, "trace", [&](Section& s) {
    s.read("from", cfg.trace_from);
    s.read("to", cfg.trace_to);
  });
  root.finish();
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  if (name == "figure3") {
    cfg.locus_count = 90;
    cfg.run_count = 1;
    cfg.emit = EmitFlags{true, false, false, true, false, false};
  } else if (name == "figure4") {
    cfg.algorithms = {Algorithm::kBlock, Algorithm::kFinkelstein};
    cfg.emit = EmitFlags{false, true, false, false, true, false};
  } else if (name == "figure5") {
    cfg.algorithms = {Algorithm::kFinkelstein};
    cfg.g_variants = {HistoryWeight::kUniform, HistoryWeight::kBentlog};
    cfg.emit = EmitFlags{false, false, true, false, false, true};
  } else {
    throw ConfigError("preset: unknown preset '" + name +
                      "' (expected figure3, figure4 or figure5)");
  }
  return cfg;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

RunConfig resolve_config(const std::optional<fs::path>& file, const json& overrides) {
  json from_file = json::object();
  if (file) {
    from_file = read_json_file(*file);
    // A manifest nests the resolved config under "config".
    if (from_file.is_object() && from_file.contains("config") &&
        from_file.contains("tool")) {
      from_file = from_file["config"];
    }
    if (!from_file.is_object()) throw ConfigError("config: expected an object");
  }
  if (!overrides.is_object()) throw ConfigError("overrides: expected an object");

  std::string preset;
  if (overrides.contains("preset") && overrides["preset"].is_string()) {
    preset = overrides["preset"].get<std::string>();
  } else if (from_file.contains("preset") && from_file["preset"].is_string()) {
    preset = from_file["preset"].get<std::string>();
  }
  RunConfig cfg = preset.empty() ? RunConfig{} : preset_config(preset);
  apply_json(cfg, from_file);
  apply_json(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::string RunRecord::g_label() const { return g ? to_string(*g) : "n/a"; }

std::uint64_t algorithm_stream_id(Algorithm a, std::optional<HistoryWeight> g) {
  switch (a) {
    case Algorithm::kBootstrap: return 1;
    case Algorithm::kBlock: return 2;
    case Algorithm::kFinkelstein:
      return g.value_or(HistoryWeight::kBentlog) == HistoryWeight::kBentlog ? 3 : 4;
  }
  return 0;
}

Rng trajectory_rng(std::uint64_t master_seed) {
  return Rng(master_seed).substream(tag::kTrajectory);
}

Rng run_rng(std::uint64_t master_seed, int run, Algorithm a,
            std::optional<HistoryWeight> g) {
  return Rng(master_seed).substream(tag::kRun, static_cast<std::uint64_t>(run),
                                    tag::kAlgorithm, algorithm_stream_id(a, g));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

StepRecord record_step(int t, const Ensemble& e, const ExperimentResult& ctx,
                       const std::vector<LocusClass>& classes) {
  StepRecord rec;
  rec.metrics = compute_metrics(t, e, ctx.beliefs[static_cast<std::size_t>(t)], classes);
  rec.mean = e.mean();
  return rec;
}

RunRecord run_one(const ExperimentResult& ctx, const ModelSpec& m, Algorithm a,
                  std::optional<HistoryWeight> g, int run) {
  const RunConfig& cfg = ctx.config;
  const auto& obs = ctx.trajectory.observations;
  const auto partition = make_partition(cfg.locus_count, cfg.zone_size);
  const auto classes = classify_loci(partition);
  const Rng rng = run_rng(cfg.master_seed, run, a, g);

  RunRecord out;
  out.algorithm = a;
  out.g = g;
  out.run = run;
  const auto start = Clock::now();
  switch (a) {
    case Algorithm::kBootstrap:
      run_bootstrap_filter(
          obs, m, cfg.bootstrap_particles, rng,
          [&](int t, const Ensemble& e, const DegeneracyStats& s) {
            StepRecord rec = record_step(t, e, ctx, classes);
            rec.has_degeneracy = true;
            rec.degeneracy = s;
            out.steps.push_back(std::move(rec));
          },
          cfg.bootstrap_resampling);
      break;
    case Algorithm::kBlock:
      run_block_filter(obs, partition, m, cfg.block_particles, rng,
                       [&](int t, const BlockStepResult& r) {
                         StepRecord rec = record_step(t, r.ensemble, ctx, classes);
                         rec.has_degeneracy = true;
                         rec.degeneracy = {0.0, 0.0};
                         for (const auto& s : r.zone_stats) {
                           rec.degeneracy.max_weight += s.max_weight;
                           rec.degeneracy.effective_sample_size += s.effective_sample_size;
                         }
                         const double zones = static_cast<double>(r.zone_stats.size());
                         rec.degeneracy.max_weight /= zones;
                         rec.degeneracy.effective_sample_size /= zones;
                         out.steps.push_back(std::move(rec));
                       });
      break;
    case Algorithm::kFinkelstein: {
      FinkelsteinConfig fc = cfg.finkelstein;
      fc.g = *g;
      run_finkelstein_filter(obs, m, fc, rng, [&](int t, const FinkelsteinStepResult& r) {
        StepRecord rec = record_step(t, r.ensemble, ctx, classes);
        rec.has_chains = true;
        rec.chains = r.diagnostics;
        out.steps.push_back(std::move(rec));
      });
      break;
    }
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

std::string series_label(const RunConfig& cfg, const RunRecord& r) {
  std::string label = to_string(r.algorithm);
  if (r.algorithm == Algorithm::kFinkelstein && cfg.g_variants.size() > 1) {
    label += "_" + r.g_label();
  }
  return label;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, const std::optional<Trajectory>& given) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  const ModelSpec m = build_paper_model(cfg.locus_count, cfg.low_obs_var_stride);

  auto start = Clock::now();
  if (given) {
    if (given->steps() != cfg.steps ||
        (cfg.steps > 0 && given->observations.front().size() != cfg.locus_count)) {
      throw InvalidDimension("run_experiment: trajectory does not match model.L / model.T");
    }
    result.trajectory = *given;
  } else {
    result.trajectory = simulate_trajectory(m, cfg.steps, trajectory_rng(cfg.master_seed));
  }
  result.trajectory_seconds = seconds_since(start);

  start = Clock::now();
  result.beliefs = kalman_filter(result.trajectory.observations, m);
  result.kalman_seconds = seconds_since(start);

  // Runs execute one after another; each filter parallelizes internally.
  for (Algorithm a : cfg.algorithms) {
    std::vector<std::optional<HistoryWeight>> variants{std::nullopt};
    if (a == Algorithm::kFinkelstein) {
      variants.assign(cfg.g_variants.begin(), cfg.g_variants.end());
    }
    for (const auto& g : variants) {
      for (int r = 0; r < cfg.run_count; ++r) {
        result.runs.push_back(run_one(result, m, a, g, r));
      }
    }
  }
  return result;
}

namespace {

// Tracks written files so a failure can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("out: cannot write " + p.string());
    written_.push_back(p);
    return out;
  }

  void close(std::ofstream& out) {
    out.close();
    if (!out) throw Error("write failed for " + written_.back().string());
  }

  void discard() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    written_.clear();
  }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

void write_trajectory_files(OutputSet& files, const Trajectory& tr, const RunConfig& cfg) {
  auto out = files.open("trajectory.csv");
  {
    CsvWriter w(out, {"time", "locus", "truth", "observation"});
    for (int t = 1; t <= tr.steps(); ++t) {
      const auto& x = tr.states[static_cast<std::size_t>(t - 1)];
      const auto& y = tr.observations[static_cast<std::size_t>(t - 1)];
      for (int l = 0; l < x.size(); ++l) w.row(t, l, x[l], y[l]);
    }
  }
  files.close(out);

  json initial = json::array();
  for (int l = 0; l < tr.initial_state.size(); ++l) initial.push_back(tr.initial_state[l]);
  auto side = files.open("trajectory.json");
  side << json{{"L", cfg.locus_count},
               {"T", tr.steps()},
               {"stride", cfg.low_obs_var_stride},
               {"seed", cfg.master_seed},
               {"initial_state", initial}}
              .dump(2)
       << '\n';
  files.close(side);
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("out: cannot create directory " + dir.string());
  }
  const fs::path probe = dir / ".hdpf_write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw ConfigError("out: directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::vector<fs::path> write_all(OutputSet& files, const ExperimentResult& res) {
  const RunConfig& cfg = res.config;
  write_trajectory_files(files, res.trajectory, cfg);

  {
    auto out = files.open("kalman.csv");
    write_beliefs_csv(out, res.beliefs);
    files.close(out);
  }

  if (cfg.emit.sqerr) {
    auto out = files.open("sqerr.csv");
    {
      CsvWriter w(out, {"run", "time", "locus", "class", "sq_err", "algorithm", "g_variant"});
      for (const auto& r : res.runs) {
        for (const auto& s : r.steps) {
          const auto& mr = s.metrics;
          for (int l = 0; l < mr.per_locus_sq_err.size(); ++l) {
            w.row(r.run, mr.time, l, to_string(mr.locus_class[static_cast<std::size_t>(l)]),
                  mr.per_locus_sq_err[l], to_string(r.algorithm), r.g_label());
          }
        }
      }
    }
    files.close(out);
  }

  if (cfg.emit.kl) {
    auto out = files.open("kl.csv");
    {
      CsvWriter w(out, {"run", "time", "g_variant", "kl", "algorithm", "kl_reverse"});
      for (const auto& r : res.runs) {
        for (const auto& s : r.steps) {
          w.row(r.run, s.metrics.time, r.g_label(), s.metrics.kl_divergence,
                to_string(r.algorithm), s.metrics.kl_reverse);
        }
      }
    }
    files.close(out);
  }

  if (cfg.emit.variance) {
    auto out = files.open("variance.csv");
    {
      CsvWriter w(out, {"run", "time", "locus", "variance_ratio", "algorithm", "g_variant"});
      for (const auto& r : res.runs) {
        for (const auto& s : r.steps) {
          for (int l = 0; l < s.metrics.variance_ratio.size(); ++l) {
            w.row(r.run, s.metrics.time, l, s.metrics.variance_ratio[l],
                  to_string(r.algorithm), r.g_label());
          }
        }
      }
    }
    files.close(out);
  }

  if (cfg.emit.degeneracy) {
    auto out = files.open("degeneracy.csv");
    {
      CsvWriter w(out, {"run", "time", "algorithm", "max_weight", "m_eff"});
      for (const auto& r : res.runs) {
        for (const auto& s : r.steps) {
          if (!s.has_degeneracy) continue;
          w.row(r.run, s.metrics.time, to_string(r.algorithm), s.degeneracy.max_weight,
                s.degeneracy.effective_sample_size);
        }
      }
    }
    files.close(out);
  }

  if (cfg.emit.chains) {
    auto out = files.open("chains.csv");
    {
      CsvWriter w(out, {"run", "time", "chain", "acceptance_rate", "modal_history_fraction",
                        "g_variant"});
      for (const auto& r : res.runs) {
        for (const auto& s : r.steps) {
          if (!s.has_chains) continue;
          const auto& d = s.chains;
          for (std::size_t k = 0; k < d.acceptance_rate.size(); ++k) {
            w.row(r.run, s.metrics.time, k, d.acceptance_rate[k], d.modal_history_fraction[k],
                  r.g_label());
          }
        }
      }
    }
    files.close(out);
  }

  if (cfg.emit.trace) {
    std::vector<std::pair<std::string, std::vector<Vector>>> series;
    for (const auto& r : res.runs) {
      if (r.run != 0) continue;
      std::vector<Vector> means;
      for (const auto& s : r.steps) means.push_back(s.mean);
      series.emplace_back(series_label(cfg, r), std::move(means));
    }
    const auto points = summed_locus_trace(res.trajectory.states, res.trajectory.observations,
                                           res.beliefs, series, cfg.trace_from, cfg.trace_to);
    auto out = files.open("trace.csv");
    {
      CsvWriter w(out, {"time", "series", "value"});
      for (const auto& p : points) w.row(p.time, p.series, p.value);
    }
    files.close(out);
  }

  json runs = json::array();
  for (const auto& r : res.runs) {
    runs.push_back({{"algorithm", to_string(r.algorithm)},
                    {"g_variant", r.g_label()},
                    {"run", r.run},
                    {"seconds", r.wall_seconds}});
  }
  json outputs = json::array();
  for (const auto& p : files.written()) outputs.push_back(p.filename().string());
  outputs.push_back("manifest.json");
  std::ostringstream eigen_version;
  eigen_version << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
                << EIGEN_MINOR_VERSION;
  const json manifest{
      {"tool", "hdpf"},
      {"version", "1.0.0"},
      {"config", to_json(cfg)},
      {"seed", cfg.master_seed},
      {"versions", {{"compiler", __VERSION__}, {"eigen", eigen_version.str()}}},
      {"threads", worker_count()},
      {"wall_seconds",
       {{"trajectory", res.trajectory_seconds}, {"kalman", res.kalman_seconds}, {"runs", runs}}},
      {"outputs", outputs}};
  auto out = files.open("manifest.json");
  out << manifest.dump(2) << '\n';
  files.close(out);
  return files.written();
}

}  // namespace

std::vector<fs::path> write_outputs(const ExperimentResult& result) {
  const fs::path dir(result.config.output_dir);
  ensure_writable(dir);
  OutputSet files(dir);
  try {
    return write_all(files, result);
  } catch (...) {
    files.discard();
    throw;
  }
}

ExperimentResult run_and_write(const RunConfig& cfg, const std::optional<Trajectory>& given) {
  cfg.validate();
  ensure_writable(cfg.output_dir);
  ExperimentResult result = run_experiment(cfg, given);
  write_outputs(result);
  return result;
}

void write_trajectory(const fs::path& dir, const Trajectory& trajectory, const RunConfig& cfg) {
  ensure_writable(dir);
  OutputSet files(dir);
  try {
    write_trajectory_files(files, trajectory, cfg);
  } catch (...) {
    files.discard();
    throw;
  }
}

StoredTrajectory read_trajectory(const fs::path& where) {
  const fs::path csv_path = fs::is_directory(where) ? where / "trajectory.csv" : where;
  const fs::path side_path = csv_path.parent_path() / "trajectory.json";
  const json side = read_json_file(side_path);

  StoredTrajectory st;
  int steps = 0;
  std::vector<double> initial;
  try {
    st.locus_count = side.at("L").get<int>();
    steps = side.at("T").get<int>();
    st.low_obs_var_stride = side.at("stride").get<int>();
    st.seed = side.at("seed").get<std::uint64_t>();
    initial = side.at("initial_state").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(side_path.string() + ": " + e.what());
  }
  if (st.locus_count < 1 || steps < 1 || initial.size() != static_cast<std::size_t>(st.locus_count)) {
    throw ConfigError(side_path.string() + ": inconsistent L / T / initial_state");
  }

  const CsvTable table = read_csv_strict(csv_path);
  if (table.rows.size() != static_cast<std::size_t>(steps) * st.locus_count) {
    throw ConfigError(csv_path.string() + ": expected L * T rows");
  }
  Trajectory& tr = st.trajectory;
  tr.initial_state = Eigen::Map<const Vector>(initial.data(), st.locus_count);
  tr.states.assign(static_cast<std::size_t>(steps), Vector::Zero(st.locus_count));
  tr.observations.assign(static_cast<std::size_t>(steps), Vector::Zero(st.locus_count));
  std::vector<char> filled(table.rows.size(), 0);
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    const double tv = table.number(row, "time");
    const double lv = table.number(row, "locus");
    const int t = static_cast<int>(tv);
    const int l = static_cast<int>(lv);
    if (t != tv || l != lv || t < 1 || t > steps || l < 0 || l >= st.locus_count) {
      throw ConfigError(csv_path.string() + ": bad time/locus at row " + std::to_string(row + 1));
    }
    const auto slot = static_cast<std::size_t>(t - 1) * st.locus_count + l;
    if (filled[slot]) {
      throw ConfigError(csv_path.string() + ": duplicate entry at row " + std::to_string(row + 1));
    }
    filled[slot] = 1;
    tr.states[static_cast<std::size_t>(t - 1)][l] = table.number(row, "truth");
    tr.observations[static_cast<std::size_t>(t - 1)][l] = table.number(row, "observation");
  }
  return st;
}

std::vector<Summary> summarize(const ExperimentResult& result) {
  std::vector<Summary> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::vector<double> counts;
  for (const auto& r : result.runs) {
    const auto key = std::make_pair(to_string(r.algorithm), r.g_label());
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(Summary{key.first, key.second});
      counts.push_back(0.0);
    }
    Summary& s = out[it->second];
    for (const auto& st : r.steps) {
      s.mean_sq_err += st.metrics.per_locus_sq_err.mean();
      s.mean_kl += st.metrics.kl_divergence;
      s.mean_variance_ratio += st.metrics.variance_ratio.mean();
      counts[it->second] += 1.0;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].mean_sq_err /= counts[i];
    out[i].mean_kl /= counts[i];
    out[i].mean_variance_ratio /= counts[i];
  }
  return out;
}

void run_sweep(const RunConfig& base, const std::string& parameter,
               const std::vector<int>& values) {
  if (parameter != "L" && parameter != "H") {
    throw ConfigError("sweep: parameter must be L or H, got '" + parameter + "'");
  }
  if (values.empty()) throw ConfigError("sweep: no values given");
  const fs::path dir(base.output_dir);
  ensure_writable(dir);
  OutputSet files(dir);
  std::vector<fs::path> subdirs;
  try {
    json timings = json::array();
    auto out = files.open("sweep.csv");
    {
      CsvWriter w(out, {"parameter", "value", "algorithm", "g_variant", "mean_sq_err", "mean_kl",
                        "mean_variance_ratio"});
      for (int v : values) {
        RunConfig cfg = base;
        if (parameter == "L") {
          cfg.locus_count = v;
          cfg.trace_to = std::min(cfg.trace_to, v - 1);
          cfg.trace_from = std::min(cfg.trace_from, cfg.trace_to);
        } else {
          cfg.finkelstein.history_count = v;
        }
        cfg.output_dir = (dir / (parameter + std::to_string(v))).string();
        subdirs.emplace_back(cfg.output_dir);
        const auto start = Clock::now();
        const ExperimentResult res = run_and_write(cfg);
        timings.push_back({{"value", v}, {"seconds", seconds_since(start)}});
        for (const auto& s : summarize(res)) {
          w.row(parameter, v, s.algorithm, s.g_variant, s.mean_sq_err, s.mean_kl,
                s.mean_variance_ratio);
        }
      }
    }
    files.close(out);
    auto man = files.open("sweep_manifest.json");
    man << json{{"tool", "hdpf"},
                {"parameter", parameter},
                {"values", values},
                {"base_config", to_json(base)},
                {"wall_seconds", timings}}
               .dump(2)
        << '\n';
    files.close(man);
  } catch (...) {
    files.discard();
    std::error_code ec;
    for (const auto& d : subdirs) fs::remove_all(d, ec);
    throw;
  }
}

void reproduce_paper(const RunConfig& base, const json& overrides) {
  json patch = overrides.is_object() ? overrides : json::object();
  patch.erase("preset");
  patch.erase("out");
  const fs::path root(base.output_dir);
  ensure_writable(root);
  std::vector<fs::path> done;
  try {
    for (const std::string name : {"figure3", "figure4", "figure5"}) {
      RunConfig cfg = preset_config(name);
      cfg.master_seed = base.master_seed;
      apply_json(cfg, patch);
      cfg.output_dir = (root / name).string();
      cfg.validate();
      done.emplace_back(cfg.output_dir);
      run_and_write(cfg);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& d : done) fs::remove_all(d, ec);
    throw;
  }
}

}  // namespace hdpf
