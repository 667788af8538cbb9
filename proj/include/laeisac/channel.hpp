#pragma once

// Line-of-sight channels from the ground base station's uniform linear array to
// each UAV and to the sensing target.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "laeisac/cxla.hpp"
#include "laeisac/world.hpp"

namespace laeisac {

struct ChannelParams {
  double l0 = 1e-3;              // linear gain at the reference distance (-30 dB)
  double d0 = 1.0;               // reference distance, meters
  double exponent = 3.2;         // UAV links
  double sensing_exponent = 3.2; // GBS <-> target link
  double d_over_lambda = 0.5;
  int antennas = 6;
  Vec2 gbs = Vec2::Zero();
};

struct ChannelSet {
  CMat hc;  // antennas x uavs, column m is h_m
  CVec hs;  // antennas
  CMat hs2; // hs hs^T, antennas x antennas
};

/// L0 * D0 / (|b - u|^2 + H^2)^exponent. The exponent applies to the squared distance.
inline double path_loss(const ChannelParams& p, const Vec2& pos, double altitude, double exponent) {
  const double dist_sq = (p.gbs - pos).squaredNorm() + altitude * altitude;
  if (!(dist_sq > 0.0)) throw std::domain_error("path_loss: zero distance to the base station");
  return p.l0 * p.d0 / std::pow(dist_sq, exponent);
}

inline double path_loss(const ChannelParams& p, const Vec2& pos, double altitude) {
  return path_loss(p, pos, altitude, p.exponent);
}

/// Angle of departure measured from the array's vertical: arccos(H / distance).
inline double aod(const ChannelParams& p, const Vec2& pos, double altitude) {
  const double dist = std::sqrt((p.gbs - pos).squaredNorm() + altitude * altitude);
  if (!(dist > 0.0)) throw std::domain_error("aod: zero distance to the base station");
  return std::acos(std::clamp(altitude / dist, -1.0, 1.0));
}

inline CVec steering_vector(const ChannelParams& p, double psi) {
  CVec c(p.antennas);
  const double phase = 2.0 * std::numbers::pi * p.d_over_lambda * std::cos(psi);
  for (int n = 0; n < p.antennas; ++n) c(n) = std::polar(1.0, phase * n);
  return c;
}

inline CVec los_channel(const ChannelParams& p, const Vec2& pos, double altitude, double exponent) {
  return std::sqrt(path_loss(p, pos, altitude, exponent)) * steering_vector(p, aod(p, pos, altitude));
}

inline ChannelSet build_channels(const ChannelParams& p, const std::vector<UavState>& uavs,
                                 const TargetState& tgt) {
  ChannelSet ch;
  ch.hc.resize(p.antennas, static_cast<Eigen::Index>(uavs.size()));
  for (std::size_t m = 0; m < uavs.size(); ++m) {
    ch.hc.col(static_cast<Eigen::Index>(m)) =
        los_channel(p, uavs[m].pos, uavs[m].altitude, p.exponent);
  }
  ch.hs = los_channel(p, tgt.pos, tgt.altitude, p.sensing_exponent);
  ch.hs2 = outer_tt(ch.hs);
  return ch;
}

}  // namespace laeisac
