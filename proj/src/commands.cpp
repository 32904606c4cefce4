#include "coalsfs/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "coalsfs/genealogy_sfs.hpp"
#include "coalsfs/mc_harness.hpp"
#include "coalsfs/text.hpp"

namespace coalsfs {

namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Config hash, extended by command-specific parameters when there are any.
std::string run_hash(const SimConfig& config, const std::string& extra = {}) {
  if (extra.empty()) return config_hash_hex(config);
  std::uint64_t h = config_hash(config);
  for (unsigned char ch : extra) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class Output {
 public:
  Output(const SimConfig& config, std::string hash) : dir_{config.out}, hash_{std::move(hash)} {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& stem, const std::string& ext, Written& written) const {
    const auto path = dir_ / (stem + "-" + hash_ + ext);
    std::ofstream f{path, std::ios::binary};
    if (!f) throw IoError("cannot write " + path.string());
    written.push_back(path);
    return f;
  }

  static void close(std::ofstream& f, const fs::path& path) {
    f.close();
    if (!f) throw IoError("write failed: " + path.string());
  }

  [[nodiscard]] const std::string& hash() const { return hash_; }
  [[nodiscard]] const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::string hash_;
};

void echo(std::ostream& out, const SimConfig& c, const std::string& hash) {
  out << "# config " << hash << '\n';
  std::ostringstream os;
  write_config(os, c);
  std::istringstream is{os.str()};
  for (std::string line; std::getline(is, line);) {
    if (line.rfind("out=", 0) == 0 || line.rfind("workers=", 0) == 0) continue;
    out << "#   " << line << '\n';
  }
}

std::vector<double> finite_or_inf(const std::vector<CensorableTime>& v) {
  std::vector<double> out;
  for (const auto& s : v) out.push_back(s.censored ? kInf : s.value);
  return out;
}

std::size_t count_censored(const std::vector<CensorableTime>& v) {
  std::size_t c = 0;
  for (const auto& s : v) c += s.censored ? 1 : 0;
  return c;
}

void write_times(std::ostream& f, const std::vector<CensorableTime>& draws) {
  f << "replicate,time,censored\n";
  for (std::size_t r = 0; r < draws.size(); ++r) {
    f << r << ',' << format_double(draws[r].value) << ',' << (draws[r].censored ? 1 : 0) << '\n';
  }
}

}  // namespace

Written cmd_simulate(const SimConfig& config, bool write_logs, std::ostream& msg) {
  config.validate();
  const Output out{config, run_hash(config)};
  const auto stop = config.stop_rule();
  const auto base = config.engine_options();
  const auto logs = run_replicates(config.replicates, config.workers, [&](std::uint64_t id) {
    EngineOptions o = base;
    o.stream_id = id;
    CoalescentSystem sys{config.n, config.topology, o};
    return sys.run_until(stop);
  });

  Written written;
  std::vector<BranchLengthTable> tables;
  tables.reserve(logs.size());
  for (const auto& log : logs) tables.push_back(branch_length_table(log, config.m_max));

  {
    auto f = out.open("branch_lengths", ".csv", written);
    f << "# coalsfs branch-lengths v1\n";
    echo(f, config, out.hash());
    f << "replicate,i,m,length,censored\n";
    for (std::size_t r = 0; r < tables.size(); ++r) {
      for (int i = 1; i <= config.n; ++i) {
        for (int m = 1; m <= config.m_max; ++m) {
          const auto& e = tables[r].at(i, m);
          f << r << ',' << i << ',' << m << ',' << format_double(e.value) << ',' << (e.censored ? 1 : 0) << '\n';
        }
      }
    }
    Output::close(f, written.back());
  }
  {
    auto f = out.open("sfs", ".csv", written);
    f << "# coalsfs sfs v1\n";
    echo(f, config, out.hash());
    f << "replicate,m,count,total_length,censored\n";
    const RngStream root{config.seed, 0};
    for (std::size_t r = 0; r < tables.size(); ++r) {
      auto s = root.substream(Purpose::poisson, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), 1);
      const auto sfs = sfs_sample(tables[r], config.nu, s);
      for (int m = 1; m <= config.m_max; ++m) {
        const auto k = static_cast<std::size_t>(m - 1);
        f << r << ',' << m << ',' << sfs.counts[k] << ',' << format_double(total_length(tables[r], m).value) << ','
          << static_cast<int>(sfs.censored[k]) << '\n';
      }
    }
    Output::close(f, written.back());
  }
  {
    auto f = out.open("summary", ".txt", written);
    f << "# coalsfs summary v1\n";
    echo(f, config, out.hash());
    std::size_t censored_runs = 0;
    for (const auto& log : logs) censored_runs += log.censored ? 1 : 0;
    f << "# replicates=" << logs.size() << " censored_runs=" << censored_runs << '\n';
    f << "m,median_nL,q10_nL,q90_nL,censored\n";
    for (int m = 1; m <= config.m_max; ++m) {
      std::vector<CensorableTime> v;
      for (const auto& t : tables) {
        const auto L = total_length(t, m);
        v.push_back({config.n * L.value, L.censored});
      }
      const auto x = finite_or_inf(v);
      f << m << ',' << format_double(median(x)) << ',' << format_double(quantile(x, 0.1)) << ','
        << format_double(quantile(x, 0.9)) << ',' << count_censored(v) << '\n';
    }
    Output::close(f, written.back());
  }
  if (write_logs) {
    const auto sub = out.dir() / ("events-" + out.hash());
    std::error_code ec;
    fs::create_directories(sub, ec);
    if (ec) throw IoError("cannot create " + sub.string() + ": " + ec.message());
    for (std::size_t r = 0; r < logs.size(); ++r) {
      char name[32];
      std::snprintf(name, sizeof name, "replicate-%06zu.log", r);
      const auto path = sub / name;
      std::ofstream f{path, std::ios::binary};
      if (!f) throw IoError("cannot write " + path.string());
      write_event_log(f, logs[r]);
      written.push_back(path);
      Output::close(f, path);
    }
  }
  msg << "simulate: " << logs.size() << " replicates, config " << out.hash() << " -> " << out.dir().string() << '\n';
  return written;
}

Written cmd_sweep(const SimConfig& config, const std::vector<int>& grid, double eps, std::ostream& msg) {
  config.validate();
  if (grid.empty()) throw ConfigError("sweep: empty n grid");
  if (!(eps > 0.0)) throw ConfigError("sweep: eps must be positive");
  std::string extra = "eps=" + format_double(eps) + " grid=";
  for (int n : grid) {
    if (n <= config.m_max || n > 65535) throw ConfigError("sweep: every n must exceed m_max");
    extra += std::to_string(n) + ",";
  }
  const Output out{config, run_hash(config, extra)};
  std::map<int, std::vector<CensorableTime>> samples;
  std::map<int, double> medians;
  for (int n : grid) {
    SimConfig c = config;
    c.n = n;
    const auto tables = table_samples(n, c.topology, c.m_max, c.stop_rule(), c.engine_options(), c.replicates,
                                      c.workers);
    for (const auto& t : tables) {
      const auto L = total_length(t, c.m_max);
      samples[n].push_back({n * L.value, L.censored});
    }
    medians[n] = median(finite_or_inf(samples[n]));
    msg << "sweep: n=" << n << " done\n";
  }
  const auto rows = convergence_test(samples, eps);
  Written written;
  auto f = out.open("sweep", ".csv", written);
  f << "# coalsfs sweep v1 m=" << config.m_max << ' ' << extra << '\n';
  echo(f, config, out.hash());
  f << "n,exceed_fraction,ci_lo,ci_hi,undetermined,median_nL,censored\n";
  for (const auto& r : rows) {
    f << r.n << ',' << format_double(r.exceed.fraction.estimate) << ',' << format_double(r.exceed.fraction.lo) << ','
      << format_double(r.exceed.fraction.hi) << ',' << r.exceed.undetermined << ',' << format_double(medians[r.n])
      << ',' << count_censored(samples[r.n]) << '\n';
    msg << "n=" << r.n << " exceed=" << format_double(r.exceed.fraction.estimate)
        << " median=" << format_double(medians[r.n]) << '\n';
  }
  Output::close(f, written.back());
  return written;
}

Written cmd_pairtime(const SimConfig& config, double gap, std::ostream& msg) {
  config.validate();
  if (!(gap > 0.0) || !std::isfinite(gap)) throw ConfigError("pairtime: gap must be positive");
  const Output out{config, run_hash(config, "gap=" + format_double(gap))};
  const auto draws = first_merge_samples({0.0, gap}, config.engine_options(), config.t_max, config.replicates,
                                         config.workers);
  const double ks = ks_distance(finite_or_inf(draws), [gap](double t) { return 1.0 - pair_hit_survival(gap, t); });
  Written written;
  auto f = out.open("pairtime", ".csv", written);
  f << "# coalsfs pairtime v1 gap=" << format_double(gap) << " ks=" << format_double(ks)
    << " censored=" << count_censored(draws) << '\n';
  echo(f, config, out.hash());
  write_times(f, draws);
  Output::close(f, written.back());
  msg << "pairtime: gap=" << format_double(gap) << " R=" << draws.size() << " KS=" << format_double(ks) << '\n';
  return written;
}

Written cmd_tripletime(const SimConfig& config, double q_lo, double q_hi, std::ostream& msg) {
  config.validate();
  const double n = config.n;
  const double m = config.m_max;
  const Output out{config, run_hash(config, "q=" + format_double(q_lo) + "," + format_double(q_hi))};
  const auto draws = first_merge_samples({0.0, 1.0 / n, (1.0 + m) / n}, config.engine_options(), config.t_max,
                                         config.replicates, config.workers);
  Written written;
  auto f = out.open("tripletime", ".csv", written);
  std::string fit_text;
  try {
    const auto fit = tail_fit(finite_or_inf(draws), q_lo, q_hi);
    fit_text = "exponent=" + format_double(fit.exponent) + " se=" + format_double(fit.std_error) +
               " t_lo=" + format_double(fit.t_lo) + " t_hi=" + format_double(fit.t_hi);
  } catch (const std::invalid_argument& e) {
    fit_text = std::string{"no-fit ("} + e.what() + ")";
  }
  f << "# coalsfs tripletime v1 n=" << config.n << " m=" << config.m_max << ' ' << fit_text
    << " censored=" << count_censored(draws) << '\n';
  echo(f, config, out.hash());
  write_times(f, draws);
  Output::close(f, written.back());
  msg << "tripletime: R=" << draws.size() << ' ' << fit_text << '\n';
  return written;
}

Written cmd_tree(const SimConfig& config, int sample_every, std::ostream& msg) {
  config.validate();
  if (sample_every < 1) throw ConfigError("tree: sample interval must be >= 1");
  const Output out{config, run_hash(config, "every=" + std::to_string(sample_every))};
  auto o = config.engine_options();
  o.sample_every = sample_every;
  CoalescentSystem sys{config.n, config.topology, o};
  const auto log = sys.run_until(StopRule::single(config.t_max));
  const auto lines = tree_polylines(log, sys.samples());
  Written written;
  auto f = out.open("tree", ".txt", written);
  echo(f, config, out.hash());
  write_polylines(f, lines);
  Output::close(f, written.back());
  auto g = out.open("tree_events", ".log", written);
  write_event_log(g, log);
  Output::close(g, written.back());
  msg << "tree: " << lines.size() << " polylines" << (log.censored ? " (censored)" : "") << '\n';
  return written;
}

std::vector<CriterionResult> cmd_validate(const SimConfig& config, const ValidationOptions& options,
                                          std::ostream& msg, Written* written) {
  ValidationOptions o = options;
  o.progress = &msg;
  const auto results = run_validation(o);
  const Output out{config, run_hash(config, "validate " + to_string(o.level) + " seed=" + std::to_string(o.seed))};
  Written w;
  auto f = out.open("validation", ".csv", w);
  write_validation_report(f, results, o);
  Output::close(f, w.back());
  msg << (all_passed(results) ? "validation passed" : "validation FAILED") << " (" << w.back().string() << ")\n";
  if (written != nullptr) *written = w;
  return results;
}

}  // namespace coalsfs
