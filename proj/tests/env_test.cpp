#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "laeisac/env.hpp"

namespace laeisac {
namespace {

EnvConfig small_config(int n, int m, int t) {
  EnvConfig cfg;
  cfg.antennas = n;
  cfg.uavs = m;
  cfg.slots = t;
  return cfg;
}

JointAction fixed_action(const EnvConfig& cfg, double heading) {
  JointAction a;
  a.bf.wc = CMat::Constant(cfg.antennas, cfg.uavs, cplx(0.5, 0.25));
  a.bf.ws = CMat::Identity(cfg.antennas, cfg.antennas);
  a.headings.assign(static_cast<std::size_t>(cfg.uavs), heading);
  return a;
}

TEST(Reset, DeterministicForEqualSeeds) {
  const EnvConfig cfg;
  Rng a(42), b(42);
  const auto [wa, sa] = reset(cfg, a);
  const auto [wb, sb] = reset(cfg, b);
  EXPECT_EQ(sa.features, sb.features);
  for (int m = 0; m < cfg.uavs; ++m) EXPECT_EQ(wa.uavs[m].goal, wb.uavs[m].goal);
}

TEST(Reset, TargetStartsAtPaperPose) {
  Rng rng(1);
  const auto [w, s] = reset(EnvConfig{}, rng);
  EXPECT_EQ(w.target.pos, Vec2(-60.0, 100.0));
  EXPECT_EQ(w.target.altitude, 70.0);
  EXPECT_NEAR(w.target.azimuth, deg2rad(30.0), 1e-15);
  EXPECT_NEAR(w.target.elevation, deg2rad(30.0), 1e-15);
}

TEST(Reset, UavsStartInsideTheirAreas) {
  const EnvConfig cfg;
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const auto [w, s] = reset(cfg, rng);
    for (const UavState& u : w.uavs) {
      EXPECT_GE(u.pos.x(), cfg.start_area.x_min);
      EXPECT_LE(u.pos.x(), cfg.start_area.x_max);
      EXPECT_GE(u.goal.y(), cfg.goal_area.y_min);
      EXPECT_LE(u.goal.y(), cfg.goal_area.y_max);
      EXPECT_EQ(u.altitude, 80.0);
    }
  }
}

TEST(Reset, MissionForFewerUavsIsAPrefix) {
  EnvConfig three = small_config(6, 3, 40);
  EnvConfig four = small_config(6, 4, 40);
  Rng a(9), b(9);
  const Mission m3 = sample_mission(three, a);
  const Mission m4 = sample_mission(four, b);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(m3.starts[i], m4.starts[i]);
    EXPECT_EQ(m3.goals[i], m4.goals[i]);
  }
}

TEST(Layout, StateAndActionDimensions) {
  const Layout lay{6, 4};
  EXPECT_EQ(lay.state_dim(), 128);
  EXPECT_EQ(lay.action_dim(), 124);
  Rng rng(3);
  EXPECT_EQ(reset(EnvConfig{}, rng).second.features.size(), 128);
}

TEST(BuildState, ZeroChannelsLeaveOnlyPositions) {
  const EnvConfig cfg = small_config(3, 2, 10);
  ChannelSet ch{CMat::Zero(3, 2), CVec::Zero(3), CMat::Zero(3, 3)};
  std::vector<UavState> uavs(2);
  uavs[0].pos = Vec2(120.0, -40.0);
  uavs[1].pos = Vec2(-7.0, 3.0);
  const MdpState s = build_state(ch, uavs, cfg);
  const Layout lay = Layout::of(cfg);
  EXPECT_TRUE(s.features.head(lay.positions()).isZero(0.0));
  EXPECT_DOUBLE_EQ(s.features(lay.positions() + 0), 1.2);
  EXPECT_DOUBLE_EQ(s.features(lay.positions() + 1), -0.4);
  EXPECT_DOUBLE_EQ(s.features(lay.positions() + 2), -0.07);
  EXPECT_DOUBLE_EQ(s.features(lay.positions() + 3), 0.03);
}

TEST(BuildState, ChannelEntriesLandAtRowMajorOffsets) {
  const EnvConfig cfg = small_config(2, 3, 10);
  ChannelSet ch{CMat::Zero(2, 3), CVec::Zero(2), CMat::Zero(2, 2)};
  ch.hc(1, 2) = cplx(3e-8, -4e-8);
  ch.hs2(0, 1) = cplx(0.0, 5e-8);
  const MdpState s = build_state(ch, std::vector<UavState>(3), cfg);
  const Layout lay = Layout::of(cfg);
  EXPECT_NEAR(s.features(lay.hc_re() + 1 * 3 + 2), 3.0, 1e-12);
  EXPECT_NEAR(s.features(lay.hc_im() + 1 * 3 + 2), -4.0, 1e-12);
  EXPECT_NEAR(s.features(lay.hs_im() + 0 * 2 + 1), 5.0, 1e-12);
  EXPECT_EQ(s.features.cwiseAbs().sum(), std::abs(s.features(lay.hc_re() + 5)) +
                                             std::abs(s.features(lay.hc_im() + 5)) +
                                             std::abs(s.features(lay.hs_im() + 1)));
}

TEST(BuildState, UavPermutationPermutesBlocks) {
  const EnvConfig cfg;
  Rng rng(4);
  auto [w, s] = reset(cfg, rng);
  const std::vector<int> perm{2, 0, 3, 1};
  WorldState pw = w;
  for (int i = 0; i < 4; ++i) pw.uavs[i] = w.uavs[perm[i]];
  const ChannelParams cp = cfg.channel_params();
  const MdpState ps = build_state(build_channels(cp, pw.uavs, pw.target), pw.uavs, cfg);
  const Layout lay = Layout::of(cfg);
  for (int n = 0; n < lay.antennas; ++n) {
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(ps.features(lay.hc_re() + n * 4 + i), s.features(lay.hc_re() + n * 4 + perm[i]));
      EXPECT_EQ(ps.features(lay.hc_im() + n * 4 + i), s.features(lay.hc_im() + n * 4 + perm[i]));
    }
  }
  for (int k = lay.hs_re(); k < lay.positions(); ++k) EXPECT_EQ(ps.features(k), s.features(k));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(ps.features(lay.positions() + 2 * i), s.features(lay.positions() + 2 * perm[i]));
    EXPECT_EQ(ps.features(lay.positions() + 2 * i + 1), s.features(lay.positions() + 2 * perm[i] + 1));
  }
}

TEST(BuildState, FeaturesStayModestAlongAnEpisode) {
  const EnvConfig cfg;
  Environment env(cfg, Rng(5), Rng(6));
  env.reset();
  double peak = env.state().features.cwiseAbs().maxCoeff();
  while (!env.done()) {
    JointAction a = fixed_action(cfg, 0.0);
    for (int m = 0; m < cfg.uavs; ++m) {
      const auto ang = straight_flight_angle(env.world().uavs[m]);
      a.headings[m] = ang.value_or(0.0);
    }
    env.step(a);
    ASSERT_TRUE(env.state().features.allFinite());
    peak = std::max(peak, env.state().features.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(peak, 10.0);
}

TEST(Step, MatchedBeamSingleUavRate) {
  EnvConfig cfg = small_config(4, 1, 5);
  Rng mrng(7);
  const auto [w, s] = reset(cfg, mrng);
  const ChannelSet ch = build_channels(cfg.channel_params(), w.uavs, w.target);
  const double c = 2.0;
  JointAction a;
  a.bf.wc = ch.hc.conjugate() * c;
  a.bf.ws = CMat::Zero(4, 4);
  a.headings = {0.0};
  Rng mob(8);
  const StepResult r = step(w, a, cfg, mob);
  const double h2 = ch.hc.squaredNorm();
  const double expected = std::log2(1.0 + h2 * h2 * c * c / cfg.noise.comm);
  EXPECT_NEAR(r.log.sum_rate, expected, 1e-12 * std::max(1.0, expected));
}

TEST(Step, DeterministicGivenEqualStreams) {
  const EnvConfig cfg;
  Rng m1(9), m2(9);
  const auto [w1, s1] = reset(cfg, m1);
  const auto [w2, s2] = reset(cfg, m2);
  Rng r1(10), r2(10);
  const JointAction a = fixed_action(cfg, 0.3);
  const StepResult a1 = step(w1, a, cfg, r1);
  const StepResult a2 = step(w2, a, cfg, r2);
  EXPECT_EQ(a1.state.features, a2.state.features);
  EXPECT_EQ(a1.log.sum_rate, a2.log.sum_rate);
  EXPECT_EQ(a1.world.target.pos, a2.world.target.pos);
}

TEST(Step, MovesUavsAndTarget) {
  const EnvConfig cfg;
  Rng mr(11), rr(12);
  const auto [w, s] = reset(cfg, mr);
  const StepResult r = step(w, fixed_action(cfg, 0.0), cfg, rr);
  for (int m = 0; m < cfg.uavs; ++m) EXPECT_NEAR(r.world.uavs[m].pos.x() - w.uavs[m].pos.x(), 10.0, 1e-12);
  EXPECT_NEAR((r.world.target.pos - w.target.pos).norm(), 10.0 * std::cos(deg2rad(30.0)), 1e-9);
}

TEST(Step, HoverLeavesUavInPlace) {
  const EnvConfig cfg;
  Rng mr(13), rr(14);
  const auto [w, s] = reset(cfg, mr);
  JointAction a = fixed_action(cfg, 1.0);
  a.hover.assign(4, false);
  a.hover[2] = true;
  const StepResult r = step(w, a, cfg, rr);
  EXPECT_EQ(r.world.uavs[2].pos, w.uavs[2].pos);
  EXPECT_NE(r.world.uavs[1].pos, w.uavs[1].pos);
}

TEST(Step, NearMissGeometryRaisesCollisionFlag) {
  EnvConfig cfg = small_config(2, 2, 5);
  Mission mission;
  mission.starts = {Vec2(0.0, 0.0), Vec2(35.0, 0.0)};
  mission.goals = {Vec2(100.0, 0.0), Vec2(-100.0, 0.0)};
  auto [w, s] = reset(cfg, mission);
  Rng rr(15);
  JointAction a = fixed_action(cfg, 0.0);
  a.headings = {0.0, std::numbers::pi};  // toward each other: 35 m -> 15 m
  const StepResult r = step(w, a, cfg, rr);
  EXPECT_TRUE(r.log.collision);
  a.headings = {std::numbers::pi, 0.0};  // apart: 35 m -> 55 m
  Rng rr2(15);
  EXPECT_FALSE(step(w, a, cfg, rr2).log.collision);
}

std::vector<SlotLog> logs_with(int t, double snr_db_value, std::vector<bool> collisions) {
  std::vector<SlotLog> logs(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    logs[i].sum_rate = 0.5 + i;
    logs[i].snr_linear = db_to_linear(snr_db_value);
    logs[i].collision = i < static_cast<int>(collisions.size()) && collisions[i];
  }
  return logs;
}

TEST(EpisodeRewards, CollisionWithUnmetSnrIsMinusTwentyFive) {
  const EnvConfig cfg = small_config(2, 2, 3);
  const EpisodeOutcome o = episode_rewards(logs_with(3, 0.5, {true, false, false}), cfg);
  EXPECT_FALSE(o.snr_met);
  EXPECT_NEAR(o.rewards[0], -25.0, 1e-12);
  EXPECT_NEAR(o.rewards[1], 1.5 - 5.0, 1e-12);
}

TEST(EpisodeRewards, CollisionWithMetSnrIsMinusTwenty) {
  const EnvConfig cfg = small_config(2, 2, 3);
  const EpisodeOutcome o = episode_rewards(logs_with(3, 4.0, {false, true, false}), cfg);
  EXPECT_TRUE(o.snr_met);
  EXPECT_EQ(o.rewards[1], -20.0);
  EXPECT_EQ(o.collisions, 1);
}

TEST(EpisodeRewards, CleanEpisodeRewardsAreSumRates) {
  const EnvConfig cfg = small_config(2, 2, 6);
  const auto logs = logs_with(6, 1.0, {});
  const EpisodeOutcome o = episode_rewards(logs, cfg);
  ASSERT_EQ(o.rewards.size(), 6u);
  for (int t = 0; t < 6; ++t) EXPECT_EQ(o.rewards[t], logs[t].sum_rate);
  EXPECT_DOUBLE_EQ(o.sum_rate_total, 0.5 * 6 + 15.0);
}

TEST(EpisodeRewards, TruthTableOverAllFourCases) {
  const EnvConfig cfg = small_config(2, 2, 2);
  for (int collide = 0; collide < 2; ++collide) {
    for (int met = 0; met < 2; ++met) {
      const double snr = met ? 3.0 : -7.0;
      const EpisodeOutcome o = episode_rewards(logs_with(2, snr, {collide == 1, collide == 1}), cfg);
      const double penalty = met ? 0.0 : 10.0 * (1.0 - snr);
      for (int t = 0; t < 2; ++t) {
        const double expected = collide ? -20.0 - penalty : (0.5 + t) - penalty;
        EXPECT_NEAR(o.rewards[t], expected, 1e-12) << "collide=" << collide << " met=" << met;
      }
    }
  }
}

TEST(EpisodeRewards, MeanIsTakenOverLinearSnr) {
  const EnvConfig cfg = small_config(2, 2, 2);
  std::vector<SlotLog> logs(2);
  logs[0].snr_linear = 0.0;
  logs[1].snr_linear = 4.0;
  const EpisodeOutcome o = episode_rewards(logs, cfg);
  EXPECT_NEAR(o.mean_snr_db, 10.0 * std::log10(2.0), 1e-12);
  EXPECT_TRUE(o.snr_met);
}

TEST(EpisodeRewards, LinearPenaltyMode) {
  EnvConfig cfg = small_config(2, 2, 1);
  cfg.snr_penalty_db = false;
  std::vector<SlotLog> logs(1);
  logs[0].snr_linear = 0.25;
  const EpisodeOutcome o = episode_rewards(logs, cfg);
  EXPECT_NEAR(o.rewards[0], -10.0 * (db_to_linear(1.0) - 0.25), 1e-12);
}

TEST(EpisodeRewards, WrongLengthThrows) {
  const EnvConfig cfg = small_config(2, 2, 4);
  EXPECT_THROW(episode_rewards(logs_with(3, 1.0, {}), cfg), std::invalid_argument);
}

TEST(ReturnsToGo, UndiscountedSuffixSums) {
  const std::vector<double> r{1.0, -2.0, 4.0};
  const auto g = returns_to_go(r);
  EXPECT_EQ(g, (std::vector<double>{3.0, 2.0, 4.0}));
  EXPECT_TRUE(returns_to_go(std::vector<double>{}).empty());
}

TEST(Environment, EpisodeHasExactlyTSlots) {
  const EnvConfig cfg = small_config(2, 2, 7);
  Environment env(cfg, Rng(16), Rng(17));
  env.reset();
  int played = 0;
  while (!env.done()) {
    env.step(fixed_action(cfg, 0.0));
    ++played;
  }
  EXPECT_EQ(played, 7);
  EXPECT_THROW(env.step(fixed_action(cfg, 0.0)), std::logic_error);
  const EpisodeOutcome o = env.finish();
  EXPECT_EQ(o.rewards.size(), 7u);
  EXPECT_EQ(o.mission_ok.size(), 2u);
}

TEST(Environment, MissionFixedAcrossEpisodesUnlessResampled) {
  EnvConfig cfg = small_config(2, 2, 3);
  Environment fixed(cfg, Rng(18), Rng(19));
  fixed.reset();
  const Vec2 first = fixed.world().uavs[0].pos;
  fixed.reset();
  EXPECT_EQ(fixed.world().uavs[0].pos, first);

  cfg.resample_mission = true;
  Environment moving(cfg, Rng(18), Rng(19));
  moving.reset();
  const Vec2 a = moving.world().uavs[0].pos;
  moving.reset();
  EXPECT_NE(moving.world().uavs[0].pos, a);
}

}  // namespace
}  // namespace laeisac
