#pragma once

// Actor-critic agent: deterministic actor with decaying Gaussian exploration, power
// scaling and the straight-flight guard on top, a recurrent critic trained on whole
// episodes, soft-updated target networks, and the baseline variants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeisac/checkpoint.hpp"
#include "laeisac/env.hpp"
#include "laeisac/nn.hpp"
#include "laeisac/replay.hpp"
#include "laeisac/rng.hpp"

namespace laeisac {

using nn::Mat;
using nn::Network;
using nn::Vec;

enum class Scheme { deeplsc, cne, cer, w, ac2 };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::deeplsc: return "deeplsc";
    case Scheme::cne: return "cne";
    case Scheme::cer: return "cer";
    case Scheme::w: return "w";
    case Scheme::ac2: return "ac2";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& name) {
  for (Scheme s : {Scheme::deeplsc, Scheme::cne, Scheme::cer, Scheme::w, Scheme::ac2}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown scheme '" + name + "' (expected deeplsc, cne, cer, w or ac2)");
}

/// What each scheme switches on or off relative to the full pipeline.
struct SchemeTraits {
  bool guard = true;           // straight-flight override near the deadline
  bool episode_replay = true;  // whole-episode records (false: single transitions)
  bool augment = true;         // permutation augmentation
  bool stochastic = false;     // Gaussian policy with advantage updates, latest episode only
};

inline SchemeTraits traits(Scheme s) {
  SchemeTraits t;
  switch (s) {
    case Scheme::deeplsc: break;
    case Scheme::cne: t.guard = false; break;
    case Scheme::cer:
      t.episode_replay = false;
      t.augment = false;
      break;
    case Scheme::w: t.augment = false; break;
    case Scheme::ac2:
      t.augment = false;
      t.stochastic = true;
      break;
  }
  return t;
}

struct AgentConfig {
  Scheme scheme = Scheme::deeplsc;
  int gru_hidden = 128;
  int fc_hidden = 128;
  double lr_actor = 1e-4;
  double lr_critic = 2e-4;
  double chi_actor = 1e-4;
  double chi_critic = 1e-4;
  double sigma_c = 0.9;  // initial noise std on the Ac head
  double sigma_s = 0.9;  // ... on the As head
  double sigma_u = 0.9;  // ... on the headings, radians
  double kappa = 0.999;
  double gamma = 1.0;
  bool bootstrap_terminal = false;
  double reward_scale = 1.0;  // rewards are multiplied by this before training
  double reward_offset = 0.0;  // added to every slot reward before scaling
  double grad_clip = 0.0;     // max gradient 2-norm per update, 0 = off
  double ac2_std = 0.3;
  std::size_t buffer_capacity = 2000;
  std::size_t minibatch = 64;
  double zeta = 0.999;
  int train_iterations = 1;  // gradient updates per episode
};

// ---------------------------------------------------------------------------------------
// Exploration and action assembly

enum class Head { c, s, u };

struct ExplorationState {
  double sigma_c = 0.9;
  double sigma_s = 0.9;
  double sigma_u = 0.9;
  double kappa = 0.999;
  std::uint64_t step = 0;

  /// sigma_i^2 * kappa^step
  double variance(Head h) const {
    const double s = h == Head::c ? sigma_c : h == Head::s ? sigma_s : sigma_u;
    return s * s * std::pow(kappa, static_cast<double>(step));
  }
};

inline double clamp_angle(double a) { return std::clamp(a, -std::numbers::pi, std::numbers::pi); }

/// Adds one draw of the current per-head noise without advancing the schedule.
inline Vec add_exploration_noise(const Vec& raw, const ExplorationState& ex, const Layout& lay, Rng& rng) {
  if (raw.size() != lay.action_dim()) throw std::invalid_argument("explore: action has wrong length");
  Vec out = raw;
  const double sc = std::sqrt(ex.variance(Head::c));
  const double ss = std::sqrt(ex.variance(Head::s));
  const double su = std::sqrt(ex.variance(Head::u));
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < lay.as_re(); ++k) out(k) += sc * g(rng);
  for (int k = lay.as_re(); k < lay.headings(); ++k) out(k) += ss * g(rng);
  for (int k = lay.headings(); k < lay.action_dim(); ++k) out(k) = clamp_angle(out(k) + su * g(rng));
  return out;
}

/// One exploration step: noise at the current variance, then the decay counter advances.
inline Vec explore(const Vec& raw, ExplorationState& ex, const Layout& lay, Rng& rng) {
  Vec out = add_exploration_noise(raw, ex, lay, rng);
  ++ex.step;
  return out;
}

inline void split_beams(const Vec& raw, const Layout& lay, CMat& ac, CMat& as) {
  ac.resize(lay.antennas, lay.uavs);
  as.resize(lay.antennas, lay.antennas);
  for (int n = 0; n < lay.antennas; ++n) {
    for (int m = 0; m < lay.uavs; ++m) {
      ac(n, m) = cplx(raw(lay.ac_re() + n * lay.uavs + m), raw(lay.ac_im() + n * lay.uavs + m));
    }
    for (int k = 0; k < lay.antennas; ++k) {
      as(n, k) = cplx(raw(lay.as_re() + n * lay.antennas + k), raw(lay.as_im() + n * lay.antennas + k));
    }
  }
}

/// Turns an explored raw vector into an executable action: beamformers scaled onto the
/// power budget, headings clamped, and (with `guard`) straight flight for every UAV whose
/// minimum remaining slot count has reached T - t - 1. `slot` is 1-based. Throws
/// std::domain_error when both beam heads are zero.
inline JointAction constrain(const Vec& raw, const WorldState& world, int slot, const EnvConfig& cfg, bool guard) {
  const Layout lay = Layout::of(cfg);
  if (raw.size() != lay.action_dim()) throw std::invalid_argument("constrain: action has wrong length");
  CMat ac, as;
  split_beams(raw, lay, ac, as);
  JointAction a;
  a.bf = scale_to_power(ac, as, cfg.p_max);
  a.raw = raw;
  a.headings.resize(static_cast<std::size_t>(lay.uavs));
  a.hover.assign(static_cast<std::size_t>(lay.uavs), false);
  for (int m = 0; m < lay.uavs; ++m) {
    double heading = clamp_angle(raw(lay.headings() + m));
    const UavState& u = world.uavs.at(static_cast<std::size_t>(m));
    if (guard && min_slots_to_goal(u) >= cfg.slots - slot - 1) {
      if (const auto straight = straight_flight_angle(u)) {
        heading = *straight;
      } else {
        a.hover[static_cast<std::size_t>(m)] = true;
      }
    }
    a.headings[static_cast<std::size_t>(m)] = heading;
  }
  return a;
}

// ---------------------------------------------------------------------------------------
// Networks

inline nn::NetworkSpec actor_spec(const Layout& lay, int gru_hidden, int fc_hidden) {
  nn::NetworkSpec s;
  s.input = lay.state_dim();
  s.gru_hidden = gru_hidden;
  s.fc_hidden = fc_hidden;
  s.output = lay.action_dim();
  s.fc_activation = nn::Activation::relu;
  s.output_activation = nn::Activation::tanh;
  s.output_scale = Vec::Ones(lay.action_dim());
  s.output_scale.tail(lay.uavs).setConstant(std::numbers::pi);
  return s;
}

/// Q(S, A) when `with_action`, otherwise the state-value head used by the AC2 baseline.
inline nn::NetworkSpec critic_spec(const Layout& lay, int gru_hidden, int fc_hidden, bool with_action = true) {
  nn::NetworkSpec s;
  s.input = lay.state_dim() + (with_action ? lay.action_dim() : 0);
  s.gru_hidden = gru_hidden;
  s.fc_hidden = fc_hidden;
  s.output = 1;
  s.fc_activation = nn::Activation::relu;
  s.output_activation = nn::Activation::linear;
  return s;
}

/// target <- chi * eval + (1 - chi) * target, elementwise.
inline void soft_update(Network& target, const Network& eval, double chi) {
  if (chi < 0.0 || chi > 1.0) throw std::invalid_argument("soft_update: chi must lie in [0, 1]");
  if (target.param_count() != eval.param_count()) throw std::invalid_argument("soft_update: shape mismatch");
  Vec& t = target.mutable_params();
  const Vec& e = eval.params();
  for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = chi * e(k) + (1.0 - chi) * t(k);
}

// ---------------------------------------------------------------------------------------
// Training batches and losses

/// B sequences of length T laid out column-wise. Per-transition replay is the T = 1 case
/// with the actor's stored hidden state as its starting point.
struct Batch {
  std::vector<Mat> states;   // T + 1 entries, state_dim x B
  std::vector<Mat> actions;  // T entries, action_dim x B
  Mat rewards;               // T x B
  Mat bootstrap;             // T x B, 1 where z = r + gamma * Q'
  std::optional<Mat> actor_h0;

  int slots() const { return static_cast<int>(actions.size()); }
  Eigen::Index size() const { return rewards.cols(); }
};

inline Batch make_batch(std::span<const EpisodeRecord> records, bool bootstrap_terminal) {
  if (records.empty()) throw std::invalid_argument("make_batch: empty minibatch");
  const auto b = static_cast<Eigen::Index>(records.size());
  const int t_len = records.front().length();
  const auto sd = records.front().states.front().size();
  const auto ad = records.front().actions.front().size();
  Batch out;
  out.states.assign(static_cast<std::size_t>(t_len) + 1, Mat(sd, b));
  out.actions.assign(static_cast<std::size_t>(t_len), Mat(ad, b));
  out.rewards.resize(t_len, b);
  out.bootstrap = Mat::Ones(t_len, b);
  if (!bootstrap_terminal) out.bootstrap.row(t_len - 1).setZero();
  for (Eigen::Index j = 0; j < b; ++j) {
    const EpisodeRecord& r = records[static_cast<std::size_t>(j)];
    r.validate();
    if (r.length() != t_len) throw std::invalid_argument("make_batch: records differ in length");
    for (int t = 0; t <= t_len; ++t) out.states[t].col(j) = r.states[t];
    for (int t = 0; t < t_len; ++t) {
      out.actions[t].col(j) = r.actions[t];
      out.rewards(t, j) = r.rewards[t];
    }
  }
  return out;
}

inline Batch make_transition_batch(std::span<const Experience> items, bool bootstrap_terminal) {
  if (items.empty()) throw std::invalid_argument("make_transition_batch: empty minibatch");
  const auto b = static_cast<Eigen::Index>(items.size());
  Batch out;
  out.states.assign(2, Mat(items.front().s.size(), b));
  out.actions.assign(1, Mat(items.front().a.size(), b));
  out.rewards.resize(1, b);
  out.bootstrap.resize(1, b);
  const bool have_h = items.front().h_in.size() > 0;
  if (have_h) out.actor_h0 = Mat(items.front().h_in.size(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Experience& e = items[static_cast<std::size_t>(j)];
    out.states[0].col(j) = e.s;
    out.states[1].col(j) = e.s_next;
    out.actions[0].col(j) = e.a;
    out.rewards(0, j) = e.r;
    out.bootstrap(0, j) = (!e.terminal || bootstrap_terminal) ? 1.0 : 0.0;
    if (have_h) out.actor_h0->col(j) = e.h_in;
  }
  return out;
}

inline Mat stack_rows(const Mat& top, const Mat& bottom) {
  Mat x(top.rows() + bottom.rows(), top.cols());
  x << top, bottom;
  return x;
}

inline Mat actor_start(const Network& actor, const Batch& b) {
  return b.actor_h0 ? *b.actor_h0 : actor.zero_state(b.size());
}

/// z(t) = scale * (r(t) + offset) + gamma * Q'(S(t+1), pi'(S(t+1))) where bootstrapping is allowed.
/// The target critic evaluates the next pair one step on from its own hidden state after
/// (S(t), A(t)), so the recurrent context matches the eval critic's.
inline Mat critic_targets(const Batch& b, const Network& target_actor, const Network& target_critic, double gamma,
                          double reward_scale, double reward_offset = 0.0) {
  const int t_len = b.slots();
  const Eigen::Index n = b.size();
  const auto next_actions = target_actor.forward(b.states, actor_start(target_actor, b)).y;

  std::vector<Mat> xs;
  xs.reserve(static_cast<std::size_t>(t_len));
  for (int t = 0; t < t_len; ++t) xs.push_back(stack_rows(b.states[t], b.actions[t]));
  const auto traced = target_critic.forward(xs, target_critic.zero_state(n));

  const Eigen::Index h = target_critic.hidden_size();
  Mat h0(h, n * t_len);
  Mat x1(target_critic.input_size(), n * t_len);
  for (int t = 0; t < t_len; ++t) {
    h0.middleCols(t * n, n) = traced.h[t];
    x1.middleCols(t * n, n) = stack_rows(b.states[t + 1], next_actions[t + 1]);
  }
  const std::vector<Mat> one{x1};
  const Mat q_next = target_critic.forward(one, h0).y.front();

  Mat z(t_len, n);
  for (int t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      z(t, j) = reward_scale * (b.rewards(t, j) + reward_offset) + gamma * b.bootstrap(t, j) * q_next(0, t * n + j);
    }
  }
  return z;
}

struct LossAndGrad {
  double value = 0.0;
  Vec grad;
};

/// L = (1/B) sum_b sum_t (Q(S(t), A(t)) - z(t))^2 and its parameter gradient.
inline LossAndGrad critic_loss_and_grad(const Network& critic, const Batch& b, const Mat& z) {
  const int t_len = b.slots();
  const Eigen::Index n = b.size();
  if (z.rows() != t_len || z.cols() != n) throw std::invalid_argument("critic_loss: target has wrong shape");
  std::vector<Mat> xs;
  for (int t = 0; t < t_len; ++t) xs.push_back(stack_rows(b.states[t], b.actions[t]));
  Network::Cache cache;
  const auto out = critic.forward(xs, critic.zero_state(n), &cache);
  LossAndGrad res;
  std::vector<Mat> dys;
  for (int t = 0; t < t_len; ++t) {
    const Mat err = out.y[t] - z.row(t);
    res.value += err.squaredNorm();
    dys.push_back(2.0 * err / static_cast<double>(n));
  }
  res.value /= static_cast<double>(n);
  res.grad = critic.backward(cache, dys).params;
  return res;
}

/// Runs the actor over the batch states and chains an action gradient through it.
/// `dj_da(actions)` receives the per-step actor outputs and returns (J, dJ/dA per step).
using ActionObjective = std::function<std::pair<double, std::vector<Mat>>(const std::vector<Mat>&)>;

inline LossAndGrad actor_chain(const Network& actor, const Batch& b, const ActionObjective& objective) {
  const std::span<const Mat> states(b.states.data(), static_cast<std::size_t>(b.slots()));
  Network::Cache cache;
  const auto out = actor.forward(states, actor_start(actor, b), &cache);
  auto [value, grads] = objective(out.y);
  LossAndGrad res;
  res.value = value;
  res.grad = actor.backward(cache, grads).params;
  return res;
}

/// J = (1/B) sum_b sum_t Q(S(t), pi(S(t))) with the critic unrolled from a zero state,
/// and dJ/dTheta_a through the critic's input gradient.
inline LossAndGrad actor_objective_and_grad(const Network& actor, const Network& critic, const Batch& b) {
  const Eigen::Index n = b.size();
  const auto sd = b.states.front().rows();
  return actor_chain(actor, b, [&](const std::vector<Mat>& acts) {
    std::vector<Mat> xs;
    for (std::size_t t = 0; t < acts.size(); ++t) xs.push_back(stack_rows(b.states[t], acts[t]));
    Network::Cache cache;
    const auto q = critic.forward(xs, critic.zero_state(n), &cache);
    double j = 0.0;
    std::vector<Mat> dq;
    for (const Mat& y : q.y) {
      j += y.sum();
      dq.push_back(Mat::Constant(1, n, 1.0 / static_cast<double>(n)));
    }
    const auto g = critic.backward(cache, dq);
    std::vector<Mat> da;
    for (const Mat& gi : g.inputs) da.push_back(gi.bottomRows(gi.rows() - sd));
    return std::pair{j / static_cast<double>(n), std::move(da)};
  });
}

/// State-value loss (1/B) sum (V(S(t)) - G(t))^2 for the AC2 baseline.
inline LossAndGrad value_loss_and_grad(const Network& critic, const Batch& b, const Mat& returns, Mat* values = nullptr) {
  const int t_len = b.slots();
  const Eigen::Index n = b.size();
  const std::span<const Mat> states(b.states.data(), static_cast<std::size_t>(t_len));
  Network::Cache cache;
  const auto out = critic.forward(states, critic.zero_state(n), &cache);
  LossAndGrad res;
  std::vector<Mat> dys;
  if (values) values->resize(t_len, n);
  for (int t = 0; t < t_len; ++t) {
    if (values) values->row(t) = out.y[t];
    const Mat err = out.y[t] - returns.row(t);
    res.value += err.squaredNorm();
    dys.push_back(2.0 * err / static_cast<double>(n));
  }
  res.value /= static_cast<double>(n);
  res.grad = critic.backward(cache, dys).params;
  return res;
}

/// Undiscounted (scaled) returns-to-go per column.
inline Mat batch_returns(const Batch& b, double reward_scale, double reward_offset = 0.0) {
  Mat g(b.rewards.rows(), b.rewards.cols());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    double acc = 0.0;
    for (Eigen::Index t = b.rewards.rows(); t-- > 0;) {
      acc += reward_scale * (b.rewards(t, j) + reward_offset);
      g(t, j) = acc;
    }
  }
  return g;
}

struct TrainStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  double critic_grad_norm = 0.0;
  double actor_grad_norm = 0.0;
  std::size_t batch_size = 0;
};

// ---------------------------------------------------------------------------------------

class Agent {
 public:
  struct Decision {
    JointAction action;
    Vec h_before;
    Vec h_after;
  };

  Agent(const EnvConfig& env, const AgentConfig& cfg, const SeedTree& seeds)
      : env_(env), cfg_(cfg), traits_(traits(cfg.scheme)), layout_(Layout::of(env)),
        buffer_(cfg.buffer_capacity, env.slots), noise_rng_(seeds.stream("exploration")),
        sample_rng_(seeds.stream("sampling")) {
    if (cfg_.minibatch == 0) throw std::invalid_argument("AgentConfig: minibatch must be positive");
    if (!(cfg_.kappa > 0.0 && cfg_.kappa <= 1.0)) throw std::invalid_argument("AgentConfig: kappa must lie in (0, 1]");
    actor_ = Network(actor_spec(layout_, cfg_.gru_hidden, cfg_.fc_hidden));
    critic_ = Network(critic_spec(layout_, cfg_.gru_hidden, cfg_.fc_hidden, !traits_.stochastic));
    Rng init = seeds.stream("init");
    actor_.init_uniform(init);
    critic_.init_uniform(init);
    target_actor_ = actor_;
    target_critic_ = critic_;
    explore_ = ExplorationState{cfg_.sigma_c, cfg_.sigma_s, cfg_.sigma_u, cfg_.kappa, 0};
    schedule_ = AugmentSchedule{cfg_.zeta, env.uavs, 0, traits_.augment};
  }

  const AgentConfig& config() const { return cfg_; }
  const SchemeTraits& scheme_traits() const { return traits_; }
  const Network& actor() const { return actor_; }
  const Network& critic() const { return critic_; }
  const Network& target_actor() const { return target_actor_; }
  const Network& target_critic() const { return target_critic_; }
  Network& mutable_actor() { return actor_; }
  Network& mutable_critic() { return critic_; }
  const ExplorationState& exploration() const { return explore_; }
  const AugmentSchedule& schedule() const { return schedule_; }
  const EpisodeBuffer& buffer() const { return buffer_; }

  void begin_episode() { h_ = actor_.zero_state(1); }

  /// pi_a(S(t)): deterministic actor output; advances the actor's recurrent state.
  Vec act_temporary(const Vec& state) {
    if (h_.size() == 0) begin_episode();
    const std::vector<Mat> xs{state};
    auto out = actor_.forward(xs, h_);
    h_ = std::move(out.h.front());
    return out.y.front().col(0);
  }

  Decision decide(const MdpState& s, const WorldState& world, int slot) {
    if (h_.size() == 0) begin_episode();
    Decision d;
    d.h_before = h_.col(0);
    const Vec mean = act_temporary(s.features);
    d.h_after = h_.col(0);
    Vec raw = perturb(mean);
    try {
      d.action = constrain(raw, world, slot, env_, traits_.guard);
    } catch (const std::domain_error&) {
      raw = perturb(mean);  // one redraw, then give up
      d.action = constrain(raw, world, slot, env_, traits_.guard);
    }
    advance_noise();
    return d;
  }

  /// Hands a finished episode to the learner.
  void observe(EpisodeRecord rec) {
    if (traits_.stochastic) {
      rec.validate();
      latest_ = std::move(rec);
    } else {
      buffer_.push(std::move(rec));
    }
  }

  TrainStats train() {
    TrainStats stats;
    for (int k = 0; k < std::max(1, cfg_.train_iterations); ++k) stats = traits_.stochastic ? train_ac2() : train_ddpg();
    return stats;
  }

  /// One actor-critic update from an explicit minibatch (no sampling, no augmentation).
  TrainStats train_on(const Batch& b) {
    TrainStats st;
    st.batch_size = static_cast<std::size_t>(b.size());
    const Mat z = critic_targets(b, target_actor_, target_critic_, cfg_.gamma, cfg_.reward_scale, cfg_.reward_offset);
    LossAndGrad c = critic_loss_and_grad(critic_, b, z);
    st.critic_loss = c.value;
    st.critic_grad_norm = nn::clip_norm(c.grad, cfg_.grad_clip);
    nn::sgd_step(critic_, c.grad, cfg_.lr_critic);

    LossAndGrad a = actor_objective_and_grad(actor_, critic_, b);
    st.actor_objective = a.value;
    st.actor_grad_norm = nn::clip_norm(a.grad, cfg_.grad_clip);
    nn::sgd_step(actor_, -a.grad, cfg_.lr_actor);  // ascent on J

    soft_update(target_actor_, actor_, cfg_.chi_actor);
    soft_update(target_critic_, critic_, cfg_.chi_critic);
    return st;
  }

  void save(const std::filesystem::path& path, io::json extra = io::json::object()) const {
    extra["scheme"] = to_string(cfg_.scheme);
    extra["exploration_step"] = explore_.step;
    extra["omega"] = schedule_.omega;
    const std::vector<io::NamedNetwork> nets{
        {"actor", &actor_}, {"critic", &critic_}, {"target_actor", &target_actor_}, {"target_critic", &target_critic_}};
    io::save_networks(path, nets, extra);
  }

  void load(const std::filesystem::path& path) {
    const io::LoadedNetworks l = io::load_networks(path);
    auto take = [&](Network& dst, const char* name) {
      const Network& src = l.at(name);
      if (src.param_count() != dst.param_count()) throw std::runtime_error(std::string("checkpoint: shape mismatch for ") + name);
      dst.set_params(src.params());
    };
    take(actor_, "actor");
    take(critic_, "critic");
    take(target_actor_, "target_actor");
    take(target_critic_, "target_critic");
    explore_.step = l.header.value("exploration_step", std::uint64_t{0});
    schedule_.omega = l.header.value("omega", std::uint64_t{0});
  }

 private:
  Vec perturb(const Vec& mean) {
    if (traits_.stochastic) {
      std::normal_distribution<double> g(0.0, cfg_.ac2_std);
      Vec out = mean;
      for (Eigen::Index k = 0; k < out.size(); ++k) out(k) += g(noise_rng_);
      return out;
    }
    return add_exploration_noise(mean, explore_, layout_, noise_rng_);
  }

  void advance_noise() {
    if (!traits_.stochastic) ++explore_.step;
  }

  TrainStats train_ddpg() {
    if (buffer_.empty()) throw std::logic_error("Agent::train: no stored episodes");
    if (traits_.episode_replay) {
      const auto records = augmented_minibatch(buffer_, schedule_, cfg_.minibatch, layout_, sample_rng_);
      return train_on(make_batch(records, cfg_.bootstrap_terminal));
    }
    const auto items =
        buffer_.sample_transitions(cfg_.minibatch * static_cast<std::size_t>(env_.slots), sample_rng_);
    schedule_.advance();
    return train_on(make_transition_batch(items, cfg_.bootstrap_terminal));
  }

  /// Advantage actor-critic on the most recent episode: V(S) regression onto the
  /// returns-to-go, policy ascent on (G - V) * log N(a; pi(S), std^2).
  TrainStats train_ac2() {
    if (!latest_) throw std::logic_error("Agent::train: no episode observed");
    const std::vector<EpisodeRecord> one{*latest_};
    const Batch b = make_batch(one, false);
    const Mat g = batch_returns(b, cfg_.reward_scale, cfg_.reward_offset);
    TrainStats st;
    st.batch_size = 1;
    Mat v;
    LossAndGrad c = value_loss_and_grad(critic_, b, g, &v);
    st.critic_loss = c.value;
    const Mat adv = g - v;
    st.critic_grad_norm = nn::clip_norm(c.grad, cfg_.grad_clip);
    nn::sgd_step(critic_, c.grad, cfg_.lr_critic);

    const double var = cfg_.ac2_std * cfg_.ac2_std;
    LossAndGrad a = actor_chain(actor_, b, [&](const std::vector<Mat>& mu) {
      double j = 0.0;
      std::vector<Mat> d;
      for (std::size_t t = 0; t < mu.size(); ++t) {
        const Mat diff = b.actions[t] - mu[t];
        j += adv(static_cast<Eigen::Index>(t), 0) * (-0.5 * diff.squaredNorm() / var);
        d.push_back(adv(static_cast<Eigen::Index>(t), 0) * diff / var);
      }
      return std::pair{j, std::move(d)};
    });
    st.actor_objective = a.value;
    st.actor_grad_norm = nn::clip_norm(a.grad, cfg_.grad_clip);
    nn::sgd_step(actor_, -a.grad, cfg_.lr_actor);
    return st;
  }

  EnvConfig env_;
  AgentConfig cfg_;
  SchemeTraits traits_;
  Layout layout_;
  Network actor_, critic_, target_actor_, target_critic_;
  ExplorationState explore_;
  AugmentSchedule schedule_;
  EpisodeBuffer buffer_;
  std::optional<EpisodeRecord> latest_;
  Rng noise_rng_;
  Rng sample_rng_;
  Mat h_;
};

}  // namespace laeisac
