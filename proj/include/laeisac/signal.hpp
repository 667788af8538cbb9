#pragma once

// Transmit power normalization and the closed-form communication / sensing metrics.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "laeisac/channel.hpp"
#include "laeisac/cxla.hpp"

namespace laeisac {

struct Beamformers {
  CMat wc;  // antennas x uavs
  CMat ws;  // antennas x antennas

  double power() const { return frobenius_sq(wc) + frobenius_sq(ws); }

  /// W = [Wc, Ws]
  CMat stacked() const {
    CMat w(wc.rows(), wc.cols() + ws.cols());
    w << wc, ws;
    return w;
  }
};

struct NoisePowers {
  double comm = 1e-11;     // per-UAV receiver noise, watts
  double sensing = 1e-11;  // base-station echo noise, watts
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// 10 log10(x); nonpositive input maps to -infinity.
inline double snr_db(double linear) {
  if (!(linear > 0.0)) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(linear);
}

/// Scales (Ac, As) by sqrt(P_max / total power) so the budget is met with equality.
inline Beamformers scale_to_power(const CMat& ac, const CMat& as, double p_max) {
  const double total = frobenius_sq(ac) + frobenius_sq(as);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::domain_error("scale_to_power: beamformers carry no power");
  }
  const double gain = std::sqrt(p_max / total);
  return Beamformers{ac * gain, as * gain};
}

/// SINR at UAV m; every other column of W (communication and radar streams) interferes.
inline double sinr(const ChannelSet& ch, const Beamformers& bf, const NoisePowers& noise, int m) {
  const auto hm = ch.hc.col(m);
  const Eigen::Matrix<cplx, 1, Eigen::Dynamic> gc = hm.transpose() * bf.wc;
  const Eigen::Matrix<cplx, 1, Eigen::Dynamic> gs = hm.transpose() * bf.ws;
  double interference = gs.squaredNorm();
  for (Eigen::Index k = 0; k < gc.size(); ++k) {
    if (k != m) interference += std::norm(gc(k));
  }
  return std::norm(gc(m)) / (interference + noise.comm);
}

inline double sum_rate(const ChannelSet& ch, const Beamformers& bf, const NoisePowers& noise) {
  double total = 0.0;
  for (int m = 0; m < ch.hc.cols(); ++m) total += std::log2(1.0 + sinr(ch, bf, noise, m));
  return total;
}

/// tr(W^H Hs^H Hs W) / sigma_b^2
inline double sensing_snr(const ChannelSet& ch, const Beamformers& bf, const NoisePowers& noise) {
  const CMat w = bf.stacked();
  const CMat echo = matmul(ch.hs2, w);
  return trace(matmul(hermitian(echo), echo)).real() / noise.sensing;
}

}  // namespace laeisac
