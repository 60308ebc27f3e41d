// hdpf: simulate, filter and benchmark lattice particle filters.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdpf/error.hpp"
#include "hdpf/harness.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> algos;
  int threads = 0;
  int L = 0;
  int T = 0;
  int stride = 0;
  int m_fink = 0;
  int m_boot = 0;
  int m_block = 0;
  int H = 0;
  int r = 0;
  int zone_size = 0;
  int sweeps = 0;
  int runs = 0;
  std::vector<std::string> g;
  std::string rho;
  std::string denominator;

  std::vector<std::pair<CLI::Option*, std::string>> options;  // option, json path
  CLI::Option* config_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App& app, Flags& f, bool with_preset) {
  f.config_opt = app.add_option("--config", f.config, "JSON config file or manifest");
  auto track = [&](CLI::Option* o, const char* path) { f.options.emplace_back(o, path); };
  if (with_preset) {
    track(app.add_option("--preset", f.preset, "figure3 | figure4 | figure5"), "preset");
  }
  track(app.add_option("--seed", f.seed, "master seed"), "seed");
  track(app.add_option("--out", f.out, "output directory"), "out");
  track(app.add_option("--algos", f.algos, "comma-separated: bootstrap,block,finkelstein")
            ->delimiter(','),
        "algorithms");
  f.threads_opt = app.add_option("--threads", f.threads, "worker threads (default HDPF_THREADS)");
  track(app.add_option("--L", f.L, "number of loci"), "model.L");
  track(app.add_option("--T", f.T, "time steps"), "model.T");
  track(app.add_option("--stride", f.stride, "low observation variance stride"), "model.stride");
  track(app.add_option("--M-fink", f.m_fink, "Finkelstein particles"), "finkelstein.M");
  track(app.add_option("--M-boot", f.m_boot, "bootstrap particles"), "bootstrap.M");
  track(app.add_option("--M-block", f.m_block, "block filter particles"), "block.M");
  track(app.add_option("--H", f.H, "sampled histories per locus"), "finkelstein.H");
  track(app.add_option("--r", f.r, "neighbourhood radius"), "finkelstein.r");
  track(app.add_option("--zone-size", f.zone_size, "block zone size"), "block.zone_size");
  track(app.add_option("--sweeps", f.sweeps, "MCMC sweeps per chain"), "finkelstein.sweeps");
  track(app.add_option("--runs", f.runs, "independent runs per algorithm"), "runs");
  track(app.add_option("--g", f.g, "history weights: uniform,bentlog")->delimiter(','),
        "finkelstein.g");
  track(app.add_option("--rho", f.rho, "full | local | sampled"), "finkelstein.rho");
  track(app.add_option("--denominator-mode", f.denominator, "stored | fresh"),
        "finkelstein.denominator");
}

// Flag values as a JSON patch so they go through the same validation as
// config files.
json overrides(const Flags& f) {
  json patch = json::object();
  auto set = [&](const std::string& path, json value) {
    const auto dot = path.find('.');
    if (dot == std::string::npos) {
      patch[path] = std::move(value);
    } else {
      patch[path.substr(0, dot)][path.substr(dot + 1)] = std::move(value);
    }
  };
  for (const auto& [opt, path] : f.options) {
    if (opt->count() == 0) continue;
    const std::string& name = opt->get_name();
    if (name == "--preset") set(path, f.preset);
    else if (name == "--seed") set(path, f.seed);
    else if (name == "--out") set(path, f.out);
    else if (name == "--algos") set(path, f.algos);
    else if (name == "--L") set(path, f.L);
    else if (name == "--T") set(path, f.T);
    else if (name == "--stride") set(path, f.stride);
    else if (name == "--M-fink") set(path, f.m_fink);
    else if (name == "--M-boot") set(path, f.m_boot);
    else if (name == "--M-block") set(path, f.m_block);
    else if (name == "--H") set(path, f.H);
    else if (name == "--r") set(path, f.r);
    else if (name == "--zone-size") set(path, f.zone_size);
    else if (name == "--sweeps") set(path, f.sweeps);
    else if (name == "--runs") set(path, f.runs);
    else if (name == "--g") set(path, f.g);
    else if (name == "--rho") set(path, f.rho);
    else if (name == "--denominator-mode") set(path, f.denominator);
  }
  return patch;
}

std::optional<std::string> config_path(const Flags& f) {
  if (f.config_opt->count() == 0) return std::nullopt;
  return f.config;
}

hdpf::RunConfig resolve(const Flags& f, json patch) {
  const auto path = config_path(f);
  return hdpf::resolve_config(path ? std::optional<std::filesystem::path>(*path) : std::nullopt,
                              patch);
}

void apply_threads(const Flags& f) {
  if (f.threads_opt->count() == 0) return;
  if (f.threads < 1) throw hdpf::ConfigError("--threads must be >= 1");
  hdpf::set_worker_count(f.threads);
}

void print_summary(const hdpf::ExperimentResult& res) {
  std::cout << "algorithm,g_variant,mean_sq_err,mean_kl,mean_variance_ratio\n";
  for (const auto& s : hdpf::summarize(res)) {
    std::cout << s.algorithm << ',' << s.g_variant << ',' << s.mean_sq_err << ',' << s.mean_kl
              << ',' << s.mean_variance_ratio << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-dimensional particle filter benchmark"};
  app.require_subcommand(1);

  Flags simulate_flags, filter_flags, compare_flags, paper_flags, sweep_flags;

  auto* simulate = app.add_subcommand("simulate", "simulate a trajectory to trajectory.csv");
  add_common(*simulate, simulate_flags, true);

  auto* filter = app.add_subcommand("filter", "run algorithms on a stored trajectory");
  add_common(*filter, filter_flags, true);
  std::string trajectory_path;
  filter->add_option("--trajectory", trajectory_path, "trajectory directory or CSV")
      ->required();

  auto* compare = app.add_subcommand("compare", "simulate, run all algorithms, emit metrics");
  add_common(*compare, compare_flags, true);

  auto* paper = app.add_subcommand("reproduce-paper", "run the figure3, figure4, figure5 presets");
  add_common(*paper, paper_flags, false);

  auto* sweep = app.add_subcommand("sweep", "repeat compare over a grid of L or H");
  add_common(*sweep, sweep_flags, true);
  std::string sweep_param = "L";
  std::vector<int> sweep_values{30, 60, 90};
  sweep->add_option("--param", sweep_param, "L or H");
  sweep->add_option("--values", sweep_values, "comma-separated grid")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      apply_threads(simulate_flags);
      const auto cfg = resolve(simulate_flags, overrides(simulate_flags));
      const auto m = hdpf::build_paper_model(cfg.locus_count, cfg.low_obs_var_stride);
      const auto tr =
          hdpf::simulate_trajectory(m, cfg.steps, hdpf::trajectory_rng(cfg.master_seed));
      hdpf::write_trajectory(cfg.output_dir, tr, cfg);
      std::cout << "wrote " << cfg.output_dir << "/trajectory.csv\n";
    } else if (filter->parsed()) {
      apply_threads(filter_flags);
      const auto stored = hdpf::read_trajectory(trajectory_path);
      json patch = overrides(filter_flags);
      patch["model"]["L"] = stored.locus_count;
      patch["model"]["T"] = stored.trajectory.steps();
      patch["model"]["stride"] = stored.low_obs_var_stride;
      // The trajectory's seed is the default so that filter matches compare.
      if (!patch.contains("seed")) patch["seed"] = stored.seed;
      const auto cfg = resolve(filter_flags, patch);
      print_summary(hdpf::run_and_write(cfg, stored.trajectory));
    } else if (compare->parsed()) {
      apply_threads(compare_flags);
      const auto cfg = resolve(compare_flags, overrides(compare_flags));
      print_summary(hdpf::run_and_write(cfg));
    } else if (paper->parsed()) {
      apply_threads(paper_flags);
      json patch = json::object();
      if (const auto path = config_path(paper_flags)) {
        patch = hdpf::read_json_file(*path);
        if (patch.contains("config") && patch.contains("tool")) patch = patch["config"];
      }
      patch.merge_patch(overrides(paper_flags));
      const auto base = hdpf::resolve_config(std::nullopt, patch);
      hdpf::reproduce_paper(base, patch);
      std::cout << "wrote " << base.output_dir << "/figure{3,4,5}\n";
    } else if (sweep->parsed()) {
      apply_threads(sweep_flags);
      const auto cfg = resolve(sweep_flags, overrides(sweep_flags));
      hdpf::run_sweep(cfg, sweep_param, sweep_values);
      std::cout << "wrote " << cfg.output_dir << "/sweep.csv\n";
    }
  } catch (const hdpf::ConfigError& e) {
    std::cerr << "hdpf: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hdpf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
