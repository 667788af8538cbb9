#pragma once

// UAV and target kinematics: constant-speed UAV headings, Gauss-Markov target
// mobility, and the collision / mission-feasibility geometry.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "laeisac/rng.hpp"

namespace laeisac {

using Vec2 = Eigen::Vector2d;

struct UavState {
  Vec2 pos = Vec2::Zero();
  double altitude = 80.0;
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  double step_len = 10.0;  // v * dt, meters per slot
};

struct TargetState {
  Vec2 pos = Vec2::Zero();
  double altitude = 70.0;
  double azimuth = 0.0;    // radians, stored unwrapped
  double elevation = 0.0;  // radians, stored unwrapped
  double step_len = 10.0;
};

struct MobilityParams {
  double mu_a = 0.9;
  double mu_e = 0.9;
  double xi_a = 10.0 * std::numbers::pi / 180.0;
  double xi_e = 10.0 * std::numbers::pi / 180.0;
  double sigma_a = 10.0 * std::numbers::pi / 180.0;
  double sigma_e = 10.0 * std::numbers::pi / 180.0;
  double altitude_floor = 1.0;
};

struct WorldState {
  std::vector<UavState> uavs;
  TargetState target;
};

inline UavState uav_step(UavState s, double angle) {
  s.pos += s.step_len * Vec2(std::cos(angle), std::sin(angle));
  return s;
}

/// One slot of target motion. The target travels along its current heading, then the
/// heading advances one AR(1) step (so the configured initial angles drive the first move).
inline TargetState gauss_markov_step(TargetState t, const MobilityParams& p, Rng& rng) {
  const double horizontal = t.step_len * std::cos(t.elevation);
  t.pos += horizontal * Vec2(std::cos(t.azimuth), std::sin(t.azimuth));
  t.altitude = std::max(p.altitude_floor, t.altitude + t.step_len * std::sin(t.elevation));

  std::normal_distribution<double> unit(0.0, 1.0);
  const double na = unit(rng);
  const double ne = unit(rng);
  t.azimuth = p.mu_a * t.azimuth + (1.0 - p.mu_a) * p.xi_a +
              std::sqrt(1.0 - p.mu_a * p.mu_a) * p.sigma_a * na;
  t.elevation = p.mu_e * t.elevation + (1.0 - p.mu_e) * p.xi_e +
                std::sqrt(1.0 - p.mu_e * p.mu_e) * p.sigma_e * ne;
  return t;
}

/// True when the pair violates the minimum separation (distance strictly below d_min).
inline bool uav_pair_collision(const UavState& a, const UavState& b, double d_min) {
  const double dz = a.altitude - b.altitude;
  return (a.pos - b.pos).squaredNorm() + dz * dz < d_min * d_min;
}

inline bool uav_target_collision(const UavState& a, const TargetState& t, double d_min) {
  const double dz = a.altitude - t.altitude;
  return (a.pos - t.pos).squaredNorm() + dz * dz < d_min * d_min;
}

inline bool any_collision(const WorldState& w, double d_min) {
  for (std::size_t i = 0; i < w.uavs.size(); ++i) {
    if (uav_target_collision(w.uavs[i], w.target, d_min)) return true;
    for (std::size_t j = i + 1; j < w.uavs.size(); ++j) {
      if (uav_pair_collision(w.uavs[i], w.uavs[j], d_min)) return true;
    }
  }
  return false;
}

inline double distance_to_goal(const UavState& s) { return (s.goal - s.pos).norm(); }

/// ceil(distance / step). The 1e-9 slack keeps rounding noise on an exact multiple
/// (100.00000000001 m at 10 m/slot) from costing an extra slot.
inline int min_slots_to_goal(const UavState& s) {
  const double ratio = distance_to_goal(s) / s.step_len;
  return std::max(0, static_cast<int>(std::ceil(ratio - 1e-9)));
}

inline constexpr double kAtGoalDistance = 1e-9;

/// Bearing toward the goal, or nullopt when already there (the UAV hovers).
inline std::optional<double> straight_flight_angle(const UavState& s) {
  const Vec2 d = s.goal - s.pos;
  if (d.norm() <= kAtGoalDistance) return std::nullopt;
  return std::atan2(d.y(), d.x());
}

inline bool mission_ok(const UavState& s, double arrival_tolerance) {
  return distance_to_goal(s) <= arrival_tolerance;
}

}  // namespace laeisac
