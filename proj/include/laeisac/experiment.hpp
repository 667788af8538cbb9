#pragma once

// The training loop (act, constrain, step, score the episode, store, train) plus the
// per-episode metrics, moving averages, repeats and parameter sweeps built on it.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "laeisac/agent.hpp"
#include "laeisac/config.hpp"
#include "laeisac/env.hpp"
#include "laeisac/replay.hpp"
#include "laeisac/rng.hpp"

namespace laeisac {

struct EpisodeMetrics {
  int episode = 0;  // 1-based
  double sum_rate = 0.0;
  double mean_snr_linear = 0.0;
  double mean_snr_db = 0.0;
  bool mission_ok = false;
  int collisions = 0;
  double reward = 0.0;  // sum of the episode's slot rewards
  double critic_loss = 0.0;
};

struct RunMetrics {
  std::vector<EpisodeMetrics> episodes;
  bool aborted = false;
  double wall_seconds = 0.0;
};

/// Mean over the window max(1, e - w + 1) .. e of each episode e (1-based).
inline std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be positive");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

/// Windowed mean of the linear SNR, reported in dB.
inline std::vector<double> moving_average_snr_db(const RunMetrics& m, std::size_t window) {
  std::vector<double> lin;
  for (const auto& e : m.episodes) lin.push_back(e.mean_snr_linear);
  std::vector<double> out = moving_average(lin, window);
  for (double& v : out) v = snr_db(v);
  return out;
}

inline std::vector<double> column(const RunMetrics& m, double EpisodeMetrics::*field) {
  std::vector<double> out;
  out.reserve(m.episodes.size());
  for (const auto& e : m.episodes) out.push_back(e.*field);
  return out;
}

/// First episode (1-based) from which the moving average stays within `rel_tol` of its
/// final value; 0 for an empty series.
inline int convergence_episode(const std::vector<double>& ma, double rel_tol = 0.05) {
  if (ma.empty()) return 0;
  const double final_value = ma.back();
  const double band = rel_tol * std::abs(final_value);
  std::size_t first = ma.size();
  for (std::size_t i = ma.size(); i-- > 0;) {
    if (std::abs(ma[i] - final_value) > band) break;
    first = i;
  }
  return static_cast<int>(first) + 1;
}

struct RunSummary {
  int episodes = 0;
  bool aborted = false;
  double final_ma_sum_rate = 0.0;
  double final_ma_snr_db = 0.0;
  double snr_min_db = 1.0;
  bool snr_constraint_met = false;
  bool mission_constraint_met = false;  // every episode in the final window
  bool collision_free = false;          // no collision in the final window
  double mission_ok_rate = 0.0;         // over all episodes
  int convergence_episode = 0;
  double mean_reward_first = 0.0;  // first min(100, n) episodes
  double mean_reward_last = 0.0;   // last min(100, n) episodes
  double wall_seconds = 0.0;
};

inline RunSummary summarize(const RunMetrics& m, const RunConfig& cfg) {
  RunSummary s;
  s.episodes = static_cast<int>(m.episodes.size());
  s.aborted = m.aborted;
  s.snr_min_db = cfg.snr_min_db;
  s.wall_seconds = m.wall_seconds;
  if (m.episodes.empty()) return s;
  const auto w = static_cast<std::size_t>(cfg.ma_window);
  const auto ma_rate = moving_average(column(m, &EpisodeMetrics::sum_rate), w);
  const auto ma_snr = moving_average_snr_db(m, w);
  s.final_ma_sum_rate = ma_rate.back();
  s.final_ma_snr_db = ma_snr.back();
  s.snr_constraint_met = s.final_ma_snr_db >= cfg.snr_min_db;
  const std::size_t n = m.episodes.size();
  const std::size_t from = n > w ? n - w : 0;
  s.mission_constraint_met = true;
  s.collision_free = true;
  for (std::size_t i = from; i < n; ++i) {
    s.mission_constraint_met = s.mission_constraint_met && m.episodes[i].mission_ok;
    s.collision_free = s.collision_free && m.episodes[i].collisions == 0;
  }
  std::size_t ok = 0;
  for (const auto& e : m.episodes) ok += e.mission_ok ? 1 : 0;
  s.mission_ok_rate = static_cast<double>(ok) / static_cast<double>(n);
  s.convergence_episode = convergence_episode(ma_rate);
  const std::size_t k = std::min<std::size_t>(100, n);
  for (std::size_t i = 0; i < k; ++i) {
    s.mean_reward_first += m.episodes[i].reward / static_cast<double>(k);
    s.mean_reward_last += m.episodes[n - k + i].reward / static_cast<double>(k);
  }
  return s;
}

struct RunHooks {
  std::function<void(const EpisodeMetrics&)> on_episode;
  const std::atomic<bool>* cancel = nullptr;
};

/// Plays `cfg.episodes` episodes and trains after each one. All randomness comes from
/// named substreams of SeedTree(cfg.seed).
inline RunMetrics run(const RunConfig& cfg, const RunHooks& hooks = {}, std::unique_ptr<Agent>* agent_out = nullptr) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const SeedTree seeds(cfg.seed);
  const EnvConfig env_cfg = cfg.env_config();
  const AgentConfig agent_cfg = cfg.agent_config();
  Environment env(env_cfg, seeds.stream("mission"), seeds.stream("mobility"));
  auto agent = std::make_unique<Agent>(env_cfg, agent_cfg, seeds);
  const bool keep_hidden = !agent->scheme_traits().episode_replay;

  RunMetrics metrics;
  metrics.episodes.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int ep = 1; ep <= cfg.episodes; ++ep) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if ((cfg.max_wall_seconds > 0 && elapsed > cfg.max_wall_seconds) || (hooks.cancel && hooks.cancel->load())) {
      metrics.aborted = true;
      break;
    }
    env.reset();
    agent->begin_episode();
    EpisodeRecord rec;
    rec.states.push_back(env.state().features);
    while (!env.done()) {
      Agent::Decision d = agent->decide(env.state(), env.world(), env.slot());
      env.step(d.action);
      rec.actions.push_back(std::move(d.action.raw));
      rec.states.push_back(env.state().features);
      if (keep_hidden) {
        rec.actor_hidden.push_back(std::move(d.h_before));
        if (env.done()) rec.actor_hidden.push_back(std::move(d.h_after));
      }
    }
    const EpisodeOutcome out = env.finish();
    rec.rewards = out.rewards;
    agent->observe(std::move(rec));
    const TrainStats st = agent->train();

    EpisodeMetrics em;
    em.episode = ep;
    em.sum_rate = out.sum_rate_total;
    em.mean_snr_linear = out.mean_snr_linear;
    em.mean_snr_db = out.mean_snr_db;
    em.mission_ok = out.all_missions_ok();
    em.collisions = out.collisions;
    for (double r : out.rewards) em.reward += r;
    em.critic_loss = st.critic_loss;
    metrics.episodes.push_back(em);
    if (hooks.on_episode) hooks.on_episode(em);
  }
  metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (agent_out) *agent_out = std::move(agent);
  return metrics;
}

/// Runs `jobs` on up to `workers` threads (0 = hardware concurrency); exceptions are
/// rethrown on the calling thread after every worker has joined.
inline void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& body, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(jobs, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Independent repeats; repeat k uses the seed of SeedTree(cfg.seed).child(k).
inline std::vector<RunMetrics> run_repeats(const RunConfig& cfg, unsigned workers = 0) {
  std::vector<RunMetrics> out(static_cast<std::size_t>(cfg.repeats));
  parallel_for(
      out.size(),
      [&](std::size_t k) {
        RunConfig c = cfg;
        c.seed = cfg.repeats == 1 ? cfg.seed : SeedTree(cfg.seed).child(k).seed();
        out[k] = run(c);
      },
      workers);
  return out;
}

enum class SweepAxis { m, t };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "m" || s == "M") return SweepAxis::m;
  if (s == "t" || s == "T") return SweepAxis::t;
  throw std::invalid_argument("unknown sweep axis '" + s + "' (expected m or t)");
}

inline std::vector<int> default_sweep_values(SweepAxis axis) {
  return axis == SweepAxis::m ? std::vector<int>{2, 3, 4, 5} : std::vector<int>{40, 50, 60, 70};
}

struct SweepCell {
  std::string scheme;
  int value = 0;
  RunSummary summary;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::m;
  std::vector<int> values;
  std::vector<std::string> schemes;
  std::vector<SweepCell> cells;  // scheme-major

  const SweepCell& at(const std::string& scheme, int value) const {
    for (const auto& c : cells) {
      if (c.scheme == scheme && c.value == value) return c;
    }
    throw std::out_of_range("SweepResult: no cell for " + scheme + " at " + std::to_string(value));
  }

  std::vector<double> series(const std::string& scheme, double RunSummary::*field) const {
    std::vector<double> out;
    for (int v : values) out.push_back(at(scheme, v).summary.*field);
    return out;
  }
};

/// Number of strict decreases along a series.
inline int inversions(const std::vector<double>& xs) {
  int n = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) n += xs[i] < xs[i - 1] ? 1 : 0;
  return n;
}

/// Every (scheme, value) cell is an independent run from the same root seed, so cells
/// of different schemes at one value share the mission and the target's trajectory.
inline SweepResult sweep(const RunConfig& base, SweepAxis axis, std::vector<int> values,
                         const std::vector<std::string>& schemes, unsigned workers = 0) {
  SweepResult res;
  res.axis = axis;
  res.values = values.empty() ? default_sweep_values(axis) : std::move(values);
  res.schemes = schemes;
  for (const auto& s : schemes) {
    for (int v : res.values) res.cells.push_back(SweepCell{s, v, {}});
  }
  parallel_for(
      res.cells.size(),
      [&](std::size_t k) {
        RunConfig c = base;
        c.scheme = res.cells[k].scheme;
        if (axis == SweepAxis::m) {
          c.n_uavs = res.cells[k].value;
        } else {
          c.n_slots = res.cells[k].value;
        }
        res.cells[k].summary = summarize(run(c), c);
      },
      workers);
  return res;
}

}  // namespace laeisac
