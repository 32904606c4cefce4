#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coalsfs/commands.hpp"
#include "coalsfs/text.hpp"

namespace {

using namespace coalsfs;

// Flag values; unset ones leave the config file (or default) alone.
struct Flags {
  std::string config_file;
  std::optional<int> n, m_max, steps_per_doubling, substep_log2, workers;
  std::optional<std::string> topology, stop, out;
  std::optional<double> dt, dt_scaled, t_max, nu, epsilon, tolerance;
  std::optional<std::uint64_t> seed, replicates;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file; flags override it");
  cmd->add_option("--n", f.n, "number of particles");
  cmd->add_option("--topology", f.topology, "line or circle")->check(CLI::IsMember({"line", "circle"}));
  cmd->add_option("--m-max", f.m_max, "largest block size tracked");
  cmd->add_option("--dt", f.dt, "absolute base step");
  cmd->add_option("--dt-scaled", f.dt_scaled, "base step as a multiple of 1/n^2");
  cmd->add_option("--steps-per-doubling", f.steps_per_doubling, "coarse steps per doubling of time (0 = uniform)");
  cmd->add_option("--substep-log2", f.substep_log2, "halve every step this many times");
  cmd->add_option("--tolerance", f.tolerance, "refinement tolerance, fraction of the fine step");
  cmd->add_option("--t-max", f.t_max, "censoring time");
  cmd->add_option("--stop", f.stop, "single, larger or determined");
  cmd->add_option("--nu", f.nu, "mutation rate");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--replicates", f.replicates, "replicate count R");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--epsilon", f.epsilon, "neighbourhood exponent slack");
  cmd->add_option("--out", f.out, "output directory (default $COALSFS_OUT or ./coalsfs-out)");
}

SimConfig build_config(const Flags& f) {
  SimConfig c;
  if (const char* env = std::getenv("COALSFS_OUT"); env != nullptr && *env != '\0') c.out = env;
  if (!f.config_file.empty()) {
    std::ifstream in{f.config_file};
    if (!in) throw ConfigError("cannot read config file " + f.config_file);
    c = read_config(in, c);
  }
  if (f.n) c.n = *f.n;
  if (f.topology) c.topology = parse_topology(*f.topology);
  if (f.m_max) c.m_max = *f.m_max;
  if (f.dt) {
    c.dt = *f.dt;
    c.dt_scaled = false;
  }
  if (f.dt_scaled) {
    if (f.dt) throw ConfigError("--dt and --dt-scaled are exclusive");
    c.dt = *f.dt_scaled;
    c.dt_scaled = true;
  }
  if (f.steps_per_doubling) c.steps_per_doubling = *f.steps_per_doubling;
  if (f.substep_log2) c.substep_log2 = *f.substep_log2;
  if (f.tolerance) c.tolerance = *f.tolerance;
  if (f.t_max) c.t_max = *f.t_max;
  if (f.stop) c.stop = parse_stop(*f.stop);
  if (f.nu) c.nu = *f.nu;
  if (f.seed) c.seed = *f.seed;
  if (f.replicates) c.replicates = *f.replicates;
  if (f.workers) c.workers = *f.workers;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.out) c.out = *f.out;
  c.validate();
  return c;
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  for (auto part : split(s, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(static_cast<int>(parse_int(part)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coalsfs: coalescing Brownian motion and site frequency spectra"};
  app.require_subcommand(1);
  Flags flags;

  auto* simulate = app.add_subcommand("simulate", "branch lengths, SFS and summary for R replicates");
  add_common(simulate, flags);
  bool write_logs = false;
  simulate->add_flag("--logs", write_logs, "also write one event log per replicate");

  auto* sweep = app.add_subcommand("sweep", "exceedance fractions of n*L over an n grid");
  add_common(sweep, flags);
  std::string grid = "50,100,200,400";
  double eps = 0.3;
  sweep->add_option("--grid", grid, "comma-separated n values");
  sweep->add_option("--eps", eps, "exceedance threshold");

  auto* pairtime = app.add_subcommand("pairtime", "two-particle meeting times against the exact law");
  add_common(pairtime, flags);
  double gap = 0.1;
  pairtime->add_option("--gap", gap, "initial distance");

  auto* tripletime = app.add_subcommand("tripletime", "three-particle first meeting and tail exponent");
  add_common(tripletime, flags);
  double q_lo = 0.9, q_hi = 0.999;
  tripletime->add_option("--q-lo", q_lo, "lower fit quantile");
  tripletime->add_option("--q-hi", q_hi, "upper fit quantile");

  auto* tree = app.add_subcommand("tree", "block trajectories of one run as polylines");
  add_common(tree, flags);
  int every = 1;
  tree->add_option("--every", every, "position sample every this many coarse steps");

  auto* validate = app.add_subcommand("validate", "run the acceptance checks");
  add_common(validate, flags);
  std::string level = "quick";
  std::string only;
  validate->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  validate->add_option("--only", only, "comma-separated criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  try {
    const SimConfig config = build_config(flags);
    if (*simulate) cmd_simulate(config, write_logs, std::cout);
    if (*sweep) cmd_sweep(config, parse_list(grid), eps, std::cout);
    if (*pairtime) cmd_pairtime(config, gap, std::cout);
    if (*tripletime) cmd_tripletime(config, q_lo, q_hi, std::cout);
    if (*tree) cmd_tree(config, every, std::cout);
    if (*validate) {
      ValidationOptions vo;
      vo.level = parse_level(level);
      vo.workers = config.workers;
      if (flags.seed) vo.seed = config.seed;
      vo.only = parse_list(only);
      const auto results = cmd_validate(config, vo, std::cout);
      return all_passed(results) ? exit_ok : exit_validation_failed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_io_error;
  }
  return exit_ok;
}
