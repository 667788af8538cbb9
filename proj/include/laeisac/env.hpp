#pragma once

// The episodic MDP seen by the base station: observable state assembly, one-slot
// transitions, and end-of-episode reward assignment.

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "laeisac/channel.hpp"
#include "laeisac/rng.hpp"
#include "laeisac/signal.hpp"
#include "laeisac/world.hpp"

namespace laeisac {

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

struct EnvConfig {
  int antennas = 6;
  int uavs = 4;
  int slots = 40;

  double p_max = 10.0;  // watts (40 dBm)
  NoisePowers noise;
  ChannelParams channel;

  double uav_step = 10.0;
  double uav_altitude = 80.0;
  Rect start_area{-150.0, -80.0, 60.0, 150.0};
  Rect goal_area{90.0, 160.0, 50.0, 160.0};
  bool resample_mission = false;

  Vec2 target_start{-60.0, 100.0};
  double target_altitude = 70.0;
  double target_azimuth = deg2rad(30.0);
  double target_elevation = deg2rad(30.0);
  double target_step = 10.0;
  MobilityParams mobility;

  double d_min = 20.0;
  double arrival_tolerance = 10.0;

  double delta1 = 20.0;
  double delta2 = 10.0;
  double snr_min_db = 1.0;
  bool snr_penalty_db = true;

  double state_channel_scale = 1e8;
  double state_position_scale = 0.01;
  double state_sensing_scale = 0.0;  // Hs block; 0 reuses state_channel_scale

  ChannelParams channel_params() const {
    ChannelParams p = channel;
    p.antennas = antennas;
    return p;
  }
};

/// Offsets of the UAV-indexed and UAV-free blocks inside flat state / action vectors.
///
/// state:  [Re Hc | Im Hc | Re Hs | Im Hs | x1 y1 ... xM yM]
/// action: [Re Ac | Im Ac | Re As | Im As | a_1 ... a_M]
/// Complex N x M blocks are flattened row-major, entry (n, m) at n * M + m, so a UAV
/// index is a column inside every row.
struct Layout {
  int antennas = 0;
  int uavs = 0;

  int nm() const { return antennas * uavs; }
  int nn() const { return antennas * antennas; }
  int state_dim() const { return 2 * nm() + 2 * nn() + 2 * uavs; }
  int action_dim() const { return 2 * nm() + 2 * nn() + uavs; }
  int beam_dim() const { return 2 * nm() + 2 * nn(); }

  int hc_re() const { return 0; }
  int hc_im() const { return nm(); }
  int hs_re() const { return 2 * nm(); }
  int hs_im() const { return 2 * nm() + nn(); }
  int positions() const { return 2 * nm() + 2 * nn(); }

  int ac_re() const { return 0; }
  int ac_im() const { return nm(); }
  int as_re() const { return 2 * nm(); }
  int as_im() const { return 2 * nm() + nn(); }
  int headings() const { return 2 * nm() + 2 * nn(); }

  static Layout of(const EnvConfig& cfg) { return Layout{cfg.antennas, cfg.uavs}; }
};

struct MdpState {
  Eigen::VectorXd features;
};

/// The action the environment executes. `raw` is the exploration output before power
/// scaling and trajectory guarding; it is what the critic and the replay buffer see.
struct JointAction {
  Beamformers bf;
  std::vector<double> headings;
  std::vector<bool> hover;
  Eigen::VectorXd raw;
};

struct SlotLog {
  double sum_rate = 0.0;
  double snr_linear = 0.0;
  bool collision = false;
};

struct EpisodeOutcome {
  std::vector<double> rewards;
  std::vector<double> sum_rates;
  double sum_rate_total = 0.0;
  double mean_snr_linear = 0.0;
  double mean_snr_db = 0.0;
  bool snr_met = false;
  std::vector<bool> mission_ok;
  int collisions = 0;

  bool all_missions_ok() const {
    for (bool ok : mission_ok) {
      if (!ok) return false;
    }
    return !mission_ok.empty();
  }
};

struct Mission {
  std::vector<Vec2> starts;
  std::vector<Vec2> goals;
};

/// UAV m's endpoints are drawn as the m-th (start, goal) pair, so a mission for M UAVs
/// is a prefix of the mission for M + 1 UAVs under the same stream.
inline Mission sample_mission(const EnvConfig& cfg, Rng& rng) {
  auto draw = [&rng](const Rect& r) {
    std::uniform_real_distribution<double> ux(r.x_min, r.x_max);
    std::uniform_real_distribution<double> uy(r.y_min, r.y_max);
    const double x = ux(rng);
    const double y = uy(rng);
    return Vec2(x, y);
  };
  Mission m;
  for (int i = 0; i < cfg.uavs; ++i) {
    m.starts.push_back(draw(cfg.start_area));
    m.goals.push_back(draw(cfg.goal_area));
  }
  return m;
}

inline WorldState initial_world(const EnvConfig& cfg, const Mission& mission) {
  WorldState w;
  for (int i = 0; i < cfg.uavs; ++i) {
    UavState u;
    u.pos = mission.starts.at(static_cast<std::size_t>(i));
    u.start = u.pos;
    u.goal = mission.goals.at(static_cast<std::size_t>(i));
    u.altitude = cfg.uav_altitude;
    u.step_len = cfg.uav_step;
    w.uavs.push_back(u);
  }
  w.target.pos = cfg.target_start;
  w.target.altitude = cfg.target_altitude;
  w.target.azimuth = cfg.target_azimuth;
  w.target.elevation = cfg.target_elevation;
  w.target.step_len = cfg.target_step;
  return w;
}

inline MdpState build_state(const ChannelSet& ch, const std::vector<UavState>& uavs,
                            const EnvConfig& cfg) {
  const Layout lay = Layout::of(cfg);
  MdpState s;
  s.features.setZero(lay.state_dim());
  auto& f = s.features;
  const double cs = cfg.state_channel_scale;
  const double ss = cfg.state_sensing_scale > 0.0 ? cfg.state_sensing_scale : cs;
  for (int n = 0; n < lay.antennas; ++n) {
    for (int m = 0; m < lay.uavs; ++m) {
      f(lay.hc_re() + n * lay.uavs + m) = cs * ch.hc(n, m).real();
      f(lay.hc_im() + n * lay.uavs + m) = cs * ch.hc(n, m).imag();
    }
    for (int k = 0; k < lay.antennas; ++k) {
      f(lay.hs_re() + n * lay.antennas + k) = ss * ch.hs2(n, k).real();
      f(lay.hs_im() + n * lay.antennas + k) = ss * ch.hs2(n, k).imag();
    }
  }
  for (int m = 0; m < lay.uavs; ++m) {
    const auto& u = uavs.at(static_cast<std::size_t>(m));
    f(lay.positions() + 2 * m) = cfg.state_position_scale * u.pos.x();
    f(lay.positions() + 2 * m + 1) = cfg.state_position_scale * u.pos.y();
  }
  return s;
}

inline std::pair<WorldState, MdpState> reset(const EnvConfig& cfg, const Mission& mission) {
  WorldState w = initial_world(cfg, mission);
  const ChannelSet ch = build_channels(cfg.channel_params(), w.uavs, w.target);
  MdpState s = build_state(ch, w.uavs, cfg);
  return {std::move(w), std::move(s)};
}

inline std::pair<WorldState, MdpState> reset(const EnvConfig& cfg, Rng& rng) {
  return reset(cfg, sample_mission(cfg, rng));
}

struct StepResult {
  WorldState world;
  MdpState state;
  SlotLog log;
};

/// Metrics use the channels of the slot the action was applied in; the collision flag
/// looks at the positions after everyone has moved.
inline StepResult step(const WorldState& world, const JointAction& action, const EnvConfig& cfg,
                       Rng& mobility_rng) {
  const ChannelParams cp = cfg.channel_params();
  const ChannelSet ch = build_channels(cp, world.uavs, world.target);

  StepResult out;
  out.log.sum_rate = sum_rate(ch, action.bf, cfg.noise);
  out.log.snr_linear = sensing_snr(ch, action.bf, cfg.noise);

  out.world.target = gauss_markov_step(world.target, cfg.mobility, mobility_rng);
  out.world.uavs = world.uavs;
  for (std::size_t m = 0; m < world.uavs.size(); ++m) {
    const bool hover = m < action.hover.size() && action.hover[m];
    if (!hover) out.world.uavs[m] = uav_step(world.uavs[m], action.headings.at(m));
  }
  out.log.collision = any_collision(out.world, cfg.d_min);

  const ChannelSet next = build_channels(cp, out.world.uavs, out.world.target);
  out.state = build_state(next, out.world.uavs, cfg);
  return out;
}

/// Per-slot rewards once the whole episode is known. The SNR requirement is judged on the
/// episode-mean sensing SNR (mean of linear values), compared and penalized in dB unless
/// `snr_penalty_db` is off.
inline EpisodeOutcome episode_rewards(std::span<const SlotLog> logs, const EnvConfig& cfg) {
  if (static_cast<int>(logs.size()) != cfg.slots) {
    throw std::invalid_argument("episode_rewards: expected " + std::to_string(cfg.slots) +
                                " slot logs, got " + std::to_string(logs.size()));
  }
  EpisodeOutcome out;
  for (const SlotLog& l : logs) {
    out.mean_snr_linear += l.snr_linear;
    out.sum_rate_total += l.sum_rate;
    out.sum_rates.push_back(l.sum_rate);
    if (l.collision) ++out.collisions;
  }
  out.mean_snr_linear /= static_cast<double>(logs.size());
  out.mean_snr_db = snr_db(out.mean_snr_linear);

  double shortfall = 0.0;
  if (cfg.snr_penalty_db) {
    out.snr_met = out.mean_snr_db >= cfg.snr_min_db;
    shortfall = cfg.snr_min_db - out.mean_snr_db;
  } else {
    const double need = db_to_linear(cfg.snr_min_db);
    out.snr_met = out.mean_snr_linear >= need;
    shortfall = need - out.mean_snr_linear;
  }

  out.rewards.reserve(logs.size());
  for (const SlotLog& l : logs) {
    double r = 0.0;
    if (l.collision) {
      r = out.snr_met ? -cfg.delta1 : -cfg.delta1 - cfg.delta2 * shortfall;
    } else {
      r = out.snr_met ? l.sum_rate : l.sum_rate - cfg.delta2 * shortfall;
    }
    out.rewards.push_back(r);
  }
  return out;
}

/// G(t) = sum of rewards from slot t to the end (undiscounted).
inline std::vector<double> returns_to_go(std::span<const double> rewards) {
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc += rewards[i];
    g[i] = acc;
  }
  return g;
}

/// Stateful wrapper: owns the fixed mission, the current world and the slot logs of the
/// running episode.
class Environment {
 public:
  Environment(EnvConfig cfg, Rng mission_rng, Rng mobility_rng)
      : cfg_(std::move(cfg)), mission_rng_(std::move(mission_rng)),
        mobility_rng_(std::move(mobility_rng)) {
    mission_ = sample_mission(cfg_, mission_rng_);
  }

  const EnvConfig& config() const { return cfg_; }
  const Mission& mission() const { return mission_; }
  const WorldState& world() const { return world_; }
  const MdpState& state() const { return state_; }
  int slot() const { return slot_; }  // 1-based index of the next slot to play

  const MdpState& reset() {
    if (cfg_.resample_mission && started_) mission_ = sample_mission(cfg_, mission_rng_);
    started_ = true;
    auto [w, s] = laeisac::reset(cfg_, mission_);
    world_ = std::move(w);
    state_ = std::move(s);
    logs_.clear();
    slot_ = 1;
    return state_;
  }

  const SlotLog& step(const JointAction& action) {
    if (slot_ > cfg_.slots) throw std::logic_error("Environment::step: episode already finished");
    StepResult r = laeisac::step(world_, action, cfg_, mobility_rng_);
    world_ = std::move(r.world);
    state_ = std::move(r.state);
    logs_.push_back(r.log);
    ++slot_;
    return logs_.back();
  }

  bool done() const { return slot_ > cfg_.slots; }

  EpisodeOutcome finish() const {
    EpisodeOutcome out = episode_rewards(logs_, cfg_);
    for (const UavState& u : world_.uavs) out.mission_ok.push_back(mission_ok(u, cfg_.arrival_tolerance));
    return out;
  }

 private:
  EnvConfig cfg_;
  Rng mission_rng_;
  Rng mobility_rng_;
  Mission mission_;
  WorldState world_;
  MdpState state_;
  std::vector<SlotLog> logs_;
  int slot_ = 1;
  bool started_ = false;
};

}  // namespace laeisac
