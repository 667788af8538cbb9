// Command-line front end: train (`run`), compare schemes over M or T (`sweep`) and
// verify the training gradients (`gradcheck`).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "laeisac/laeisac.hpp"
#include "laeisac/verify.hpp"

namespace fs = std::filesystem;
using namespace laeisac;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::string> scheme;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string out;
  unsigned workers = 0;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "key = value configuration file (defaults when omitted)")
      ->check(CLI::ExistingFile);
  app->add_option("--episodes", o.episodes, "episodes per run");
  app->add_option("--seed", o.seed, "root seed (overrides the file and LAE_ISAC_SEED)");
  app->add_option("--set", o.overrides, "extra key=value overrides, applied last")->take_all();
  app->add_option("--workers", o.workers, "parallel workers for repeats / sweep cells (0 = all cores)");
}

// file < LAE_ISAC_SEED < flags
RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  apply_seed_env(cfg);
  if (o.scheme) cfg.scheme = *o.scheme;
  if (o.episodes) cfg.episodes = *o.episodes;
  if (o.seed) cfg.seed = *o.seed;
  apply_overrides(cfg, o.overrides);
  return cfg;
}

void print_summary(const RunSummary& s, const RunConfig& cfg, std::ostream& os) {
  char line[256];
  std::snprintf(line, sizeof line,
                "%s seed=%llu episodes=%d%s  sum_rate(ma)=%.4g  snr(ma)=%.3f dB [%s %.2f dB]  mission=%s  "
                "collision_free=%s  reward first/last 100 = %.2f / %.2f\n",
                cfg.scheme.c_str(), static_cast<unsigned long long>(cfg.seed), s.episodes,
                s.aborted ? " (aborted)" : "", s.final_ma_sum_rate, s.final_ma_snr_db,
                s.snr_constraint_met ? "meets" : "misses", s.snr_min_db, s.mission_constraint_met ? "yes" : "no",
                s.collision_free ? "yes" : "no", s.mean_reward_first, s.mean_reward_last);
  os << line;
}

int cmd_run(const CommonOptions& o, int repeats_flag, double wall) {
  RunConfig cfg = resolve(o);
  if (repeats_flag > 0) cfg.repeats = repeats_flag;
  if (wall > 0) cfg.max_wall_seconds = wall;
  validate(cfg);
  const fs::path out(o.out);
  fs::create_directories(out);
  save_config(cfg, out / "config.conf");

  std::mutex io_mu;
  auto one = [&](const RunConfig& c, const fs::path& dir, bool progress) {
    RunHooks hooks;
    const int every = std::max(1, c.episodes / 20);
    if (progress) {
      hooks.on_episode = [&, every](const EpisodeMetrics& e) {
        if (e.episode % every == 0) {
          const std::lock_guard<std::mutex> lock(io_mu);
          std::fprintf(stderr, "  episode %d/%d  reward %.2f  snr %.3f dB  mission %s\n", e.episode, c.episodes,
                       e.reward, e.mean_snr_db, e.mission_ok ? "ok" : "missed");
        }
      };
    }
    std::unique_ptr<Agent> agent;
    const RunMetrics m = run(c, hooks, &agent);
    report(m, c, dir);
    agent->save(dir / "checkpoint.bin", io::json{{"seed", c.seed}, {"episodes", m.episodes.size()}});
    return summarize(m, c);
  };

  if (cfg.repeats == 1) {
    const RunSummary s = one(cfg, out, true);
    print_summary(s, cfg, std::cout);
    return 0;
  }
  std::vector<RunSummary> sums(static_cast<std::size_t>(cfg.repeats));
  std::vector<RunConfig> cfgs(sums.size(), cfg);
  parallel_for(
      sums.size(),
      [&](std::size_t k) {
        cfgs[k].seed = SeedTree(cfg.seed).child(k).seed();
        cfgs[k].repeats = 1;
        char name[32];
        std::snprintf(name, sizeof name, "repeat_%02zu", k);
        sums[k] = one(cfgs[k], out / name, false);
      },
      o.workers);
  nlohmann::json all = nlohmann::json::array();
  double rate = 0, snr_lin = 0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    print_summary(sums[k], cfgs[k], std::cout);
    all.push_back(summary_json(sums[k], cfgs[k]));
    rate += sums[k].final_ma_sum_rate / static_cast<double>(sums.size());
    snr_lin += db_to_linear(sums[k].final_ma_snr_db) / static_cast<double>(sums.size());
  }
  std::ofstream(out / "repeats.json") << nlohmann::json{{"runs", all},
                                                        {"mean_final_ma_sum_rate", rate},
                                                        {"mean_snr_db", snr_db(snr_lin)}}
                                             .dump(2)
                                      << '\n';
  std::printf("mean over %d repeats: sum_rate(ma)=%.4g  snr=%.3f dB\n", cfg.repeats, rate, snr_db(snr_lin));
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& axis_name, std::vector<int> values,
              std::vector<std::string> schemes) {
  const RunConfig cfg = resolve(o);
  const SweepAxis axis = sweep_axis_from_string(axis_name);
  for (const auto& s : schemes) (void)scheme_from_string(s);
  const SweepResult r = sweep(cfg, axis, std::move(values), schemes, o.workers);
  write_sweep_table(std::cout, r);
  if (!o.out.empty()) {
    const fs::path out(o.out);
    fs::create_directories(out);
    std::ofstream table(out / "sweep.csv");
    write_sweep_table(table, r);
    std::ofstream(out / "sweep.json") << sweep_json(r).dump(2) << '\n';
    save_config(cfg, out / "config.conf");
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  bool ok = true;
  for (const auto& c : gradient_suite(seed, tol)) {
    std::printf("%-40s checked %4zu  max rel err %.3e  %s\n", c.name.c_str(), c.checked, c.max_rel_error,
                c.passed ? "PASS" : "FAIL");
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint beamforming and UAV trajectory learning for ISAC"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  int repeats = 0;
  double wall = 0.0;
  auto* run_cmd = app.add_subcommand("run", "train one scheme and write episodes.csv, summary.json, curves.svg");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--scheme", run_opts.scheme, "deeplsc | cne | cer | w | ac2");
  run_cmd->add_option("--out", run_opts.out, "output directory")->required();
  run_cmd->add_option("--repeats", repeats, "independent repeats with derived seeds");
  run_cmd->add_option("--max-wall-seconds", wall, "stop early after this many seconds, keeping partial metrics");

  CommonOptions sweep_opts;
  std::string axis = "m";
  std::vector<int> values;
  std::vector<std::string> schemes{"deeplsc", "cne", "cer", "w", "ac2"};
  auto* sweep_cmd = app.add_subcommand("sweep", "compare schemes while varying M or T");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", axis, "m (UAV count) or t (slots per episode)")->required();
  sweep_cmd->add_option("--values", values, "axis values (default 2 3 4 5 for m, 40 50 60 70 for t)");
  sweep_cmd->add_option("--schemes", schemes, "schemes to compare")->delimiter(',');
  sweep_cmd->add_option("--out", sweep_opts.out, "directory for sweep.csv / sweep.json");

  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the critic and actor gradients");
  gc_cmd->add_option("--seed", gc_seed, "seed for the random problem");
  gc_cmd->add_option("--tol", gc_tol, "maximum relative error");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run_opts, repeats, wall);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, axis, values, schemes);
    if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
