#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "laeisac/signal.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace laeisac {
namespace {

using testing::random_cmat;
using testing::random_cvec;
using testing::rel_diff;

ChannelSet random_channels(std::mt19937_64& rng, int n, int m) {
  ChannelSet ch;
  ch.hc = random_cmat(rng, n, m);
  ch.hs = random_cvec(rng, n);
  ch.hs2 = outer_tt(ch.hs);
  return ch;
}

TEST(ScaleToPower, AlreadyAtBudgetIsUnchanged) {
  CMat ac = CMat::Zero(2, 1);
  CMat as = CMat::Zero(2, 2);
  ac(0, 0) = cplx(2.0, 0.0);
  as(1, 1) = cplx(0.0, std::sqrt(6.0));
  const Beamformers bf = scale_to_power(ac, as, 10.0);
  EXPECT_NEAR(bf.wc(0, 0).real(), 2.0, 1e-15);
  EXPECT_NEAR(bf.ws(1, 1).imag(), std::sqrt(6.0), 1e-15);
}

TEST(ScaleToPower, FourTimesBudgetHalvesEveryEntry) {
  std::mt19937_64 rng(1);
  CMat ac = random_cmat(rng, 3, 2);
  CMat as = random_cmat(rng, 3, 3);
  const double total = frobenius_sq(ac) + frobenius_sq(as);
  const Beamformers bf = scale_to_power(ac, as, total / 4.0);
  EXPECT_LT((bf.wc - 0.5 * ac).norm(), 1e-14);
  EXPECT_LT((bf.ws - 0.5 * as).norm(), 1e-14);
}

TEST(ScaleToPower, MeetsFortyDbmBudgetWithEquality) {
  std::mt19937_64 rng(2);
  const double p_max = dbm_to_watts(40.0);
  EXPECT_NEAR(p_max, 10.0, 1e-12);
  std::uniform_real_distribution<double> mag(-12.0, 6.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double s = std::pow(10.0, mag(rng));
    const Beamformers bf = scale_to_power(random_cmat(rng, 6, 4, s), random_cmat(rng, 6, 6, s), p_max);
    EXPECT_LE(std::abs(bf.power() - p_max) / p_max, 1e-9);
  }
}

TEST(ScaleToPower, ZeroInputThrows) {
  EXPECT_THROW(scale_to_power(CMat::Zero(2, 2), CMat::Zero(2, 2), 10.0), std::domain_error);
}

TEST(Sinr, ZeroBeamformersGiveZero) {
  std::mt19937_64 rng(3);
  const ChannelSet ch = random_channels(rng, 4, 2);
  const Beamformers bf{CMat::Zero(4, 2), CMat::Zero(4, 4)};
  EXPECT_EQ(sinr(ch, bf, NoisePowers{1.0, 1.0}, 0), 0.0);
  EXPECT_EQ(sum_rate(ch, bf, NoisePowers{1.0, 1.0}), 0.0);
  EXPECT_EQ(sensing_snr(ch, bf, NoisePowers{1.0, 1.0}), 0.0);
}

TEST(Sinr, MatchedFilterSingleUser) {
  std::mt19937_64 rng(4);
  const ChannelSet ch = random_channels(rng, 5, 1);
  const double c = 0.7, noise = 0.3;
  Beamformers bf{ch.hc.conjugate() * c, CMat::Zero(5, 5)};
  const double h2 = ch.hc.squaredNorm();
  EXPECT_NEAR(sinr(ch, bf, NoisePowers{noise, 1.0}, 0), h2 * h2 * c * c / noise, 1e-12 * h2 * h2 / noise);
}

TEST(Sinr, MatchesColumnEnumerationOracle) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    const ChannelSet ch = random_channels(rng, 4, 3);
    const Beamformers bf{random_cmat(rng, 4, 3), random_cmat(rng, 4, 4)};
    for (int m = 0; m < 3; ++m) {
      EXPECT_LE(rel_diff(sinr(ch, bf, NoisePowers{0.5, 1.0}, m), testing::sinr_oracle(ch, bf, 0.5, m)), 1e-10);
    }
  }
}

TEST(SumRate, UnitSinrGivesOneBitPerUav) {
  // Orthogonal unit channels with a single unit-gain desired stream each: SINR = 1/noise.
  ChannelSet ch;
  ch.hc = CMat::Identity(3, 3);
  ch.hs = CVec::Zero(3);
  ch.hs2 = CMat::Zero(3, 3);
  const Beamformers bf{CMat::Identity(3, 3), CMat::Zero(3, 3)};
  EXPECT_DOUBLE_EQ(sum_rate(ch, bf, NoisePowers{1.0, 1.0}), 3.0);
}

TEST(SumRate, DesiredGainIsMonotone) {
  std::mt19937_64 rng(6);
  const ChannelSet ch = random_channels(rng, 4, 2);
  Beamformers bf{random_cmat(rng, 4, 2), random_cmat(rng, 4, 4)};
  const CMat base = bf.wc;
  double prev = -1.0;
  for (double g = 0.0; g <= 5.0; g += 0.25) {
    bf.wc.col(0) = base.col(0) * g;
    const double term = std::log2(1.0 + sinr(ch, bf, NoisePowers{0.1, 1.0}, 0));
    EXPECT_GE(term, prev);
    prev = term;
  }
}

TEST(SumRate, InvariantToPerColumnPhase) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const ChannelSet ch = random_channels(rng, 4, 3);
    Beamformers bf{random_cmat(rng, 4, 3), random_cmat(rng, 4, 4)};
    const double before = sum_rate(ch, bf, NoisePowers{0.5, 1.0});
    bf.wc.col(rep % 3) *= std::polar(1.0, 0.37 * rep);
    bf.ws.col(rep % 4) *= std::polar(1.0, -1.1 * rep);
    EXPECT_LE(rel_diff(before, sum_rate(ch, bf, NoisePowers{0.5, 1.0})), 1e-10);
  }
}

TEST(SensingSnr, TraceFormEqualsRankOneForm) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 1000; ++rep) {
    const ChannelSet ch = random_channels(rng, 5, 3);
    const Beamformers bf{random_cmat(rng, 5, 3), random_cmat(rng, 5, 5)};
    EXPECT_LE(rel_diff(sensing_snr(ch, bf, NoisePowers{1.0, 0.2}),
                       testing::sensing_snr_rank1(ch.hs, bf, 0.2)),
              1e-10);
  }
}

TEST(SensingSnr, QuadraticInBeamformers) {
  std::mt19937_64 rng(9);
  const ChannelSet ch = random_channels(rng, 3, 2);
  const Beamformers bf{random_cmat(rng, 3, 2), random_cmat(rng, 3, 3)};
  const Beamformers twice{bf.wc * 2.0, bf.ws * 2.0};
  EXPECT_NEAR(sensing_snr(ch, twice, {}) / sensing_snr(ch, bf, {}), 4.0, 1e-12);
}

TEST(Metrics, InvariantUnderJointUavPermutation) {
  std::mt19937_64 rng(10);
  std::vector<int> perm(4);
  for (int rep = 0; rep < 200; ++rep) {
    const ChannelSet ch = random_channels(rng, 5, 4);
    const Beamformers bf{random_cmat(rng, 5, 4), random_cmat(rng, 5, 5)};
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ChannelSet pch = ch;
    Beamformers pbf = bf;
    for (int i = 0; i < 4; ++i) {
      pch.hc.col(i) = ch.hc.col(perm[i]);
      pbf.wc.col(i) = bf.wc.col(perm[i]);
    }
    const NoisePowers np{0.3, 0.4};
    EXPECT_LE(rel_diff(sum_rate(ch, bf, np), sum_rate(pch, pbf, np)), 1e-10);
    EXPECT_LE(rel_diff(sensing_snr(ch, bf, np), sensing_snr(pch, pbf, np)), 1e-10);
    for (int i = 0; i < 4; ++i) {
      EXPECT_LE(rel_diff(sinr(ch, bf, np, perm[i]), sinr(pch, pbf, np, i)), 1e-10);
    }
  }
}

TEST(SnrDb, Conversions) {
  EXPECT_DOUBLE_EQ(snr_db(1.0), 0.0);
  EXPECT_DOUBLE_EQ(snr_db(10.0), 10.0);
  EXPECT_TRUE(std::isinf(snr_db(0.0)) && snr_db(0.0) < 0);
  EXPECT_TRUE(std::isinf(snr_db(-3.0)));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> db(-200.0, 80.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = db(rng);
    EXPECT_NEAR(snr_db(db_to_linear(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
  }
}

}  // namespace
}  // namespace laeisac
