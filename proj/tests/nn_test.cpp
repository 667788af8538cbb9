#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "laeisac/nn.hpp"

namespace laeisac::nn {
namespace {

NetworkSpec small_spec(Activation fc = Activation::tanh, Activation out = Activation::linear) {
  NetworkSpec s;
  s.input = 4;
  s.gru_hidden = 8;
  s.fc_hidden = 6;
  s.output = 3;
  s.fc_activation = fc;
  s.output_activation = out;
  return s;
}

std::vector<Mat> random_seq(std::mt19937_64& rng, int len, int rows, int batch) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Mat> xs;
  for (int t = 0; t < len; ++t) {
    Mat x(rows, batch);
    for (int i = 0; i < x.size(); ++i) x(i) = g(rng);
    xs.push_back(x);
  }
  return xs;
}

Network random_net(const NetworkSpec& spec, std::uint64_t seed, double bias_noise = 0.3) {
  Network net(spec);
  std::mt19937_64 rng(seed);
  net.init_uniform(rng);
  // non-zero biases so every parameter class is exercised by the checks
  std::normal_distribution<double> g(0.0, bias_noise);
  Vec p = net.params();
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == 0.0) p(k) = g(rng);
  }
  net.set_params(p);
  return net;
}

/// L = sum_t <C_t, y_t> + 0.5 * sum_t |y_t|^2 + <D, h_T>
struct ProbeLoss {
  std::vector<Mat> c;
  Mat d;

  double value(const Network& net, const std::vector<Mat>& xs, const Mat& h0) const {
    const auto out = net.forward(xs, h0);
    double l = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) l += c[t].cwiseProduct(out.y[t]).sum() + 0.5 * out.y[t].squaredNorm();
    return l + d.cwiseProduct(out.h.back()).sum();
  }

  Network::Gradients grad(const Network& net, const std::vector<Mat>& xs, const Mat& h0) const {
    Network::Cache cache;
    const auto out = net.forward(xs, h0, &cache);
    std::vector<Mat> dys;
    for (std::size_t t = 0; t < xs.size(); ++t) dys.push_back(c[t] + out.y[t]);
    return net.backward(cache, dys, &d);
  }
};

ProbeLoss make_probe(std::mt19937_64& rng, const NetworkSpec& spec, int len, int batch) {
  ProbeLoss p;
  p.c = random_seq(rng, len, spec.output, batch);
  p.d = random_seq(rng, 1, spec.gru_hidden, batch).front();
  return p;
}

TEST(Gru, ZeroWeightsKeepZeroState) {
  Network net(small_spec());
  std::mt19937_64 rng(1);
  const auto xs = random_seq(rng, 6, 4, 2);
  const auto out = net.forward(xs, net.zero_state(2));
  for (const Mat& h : out.h) EXPECT_TRUE(h.isZero(0.0));
  for (const Mat& y : out.y) EXPECT_TRUE(y.isZero(0.0));
}

TEST(Gru, OutputBiasPropagatesAlone) {
  Network net(small_spec(Activation::relu));
  Vec p = Vec::Zero(net.param_count());
  p.tail(3) << 0.5, -1.0, 2.0;
  net.set_params(p);
  const std::vector<Mat> xs{Mat::Zero(4, 1)};
  const Mat y = net.forward(xs, net.zero_state(1)).y[0];
  EXPECT_EQ(y(0), 0.5);
  EXPECT_EQ(y(1), -1.0);
  EXPECT_EQ(y(2), 2.0);
}

TEST(Gru, PrefixOfASequenceMatchesShorterRun) {
  const Network net = random_net(small_spec(), 2);
  std::mt19937_64 rng(3);
  const auto xs = random_seq(rng, 5, 4, 3);
  const auto full = net.forward(xs, net.zero_state(3));
  const auto one = net.forward(std::span<const Mat>(xs.data(), 1), net.zero_state(3));
  EXPECT_EQ(full.y[0], one.y[0]);
  EXPECT_EQ(full.h[0], one.h[0]);
}

TEST(Gru, HiddenStateStaysInOpenUnitInterval) {
  const Network net = random_net(small_spec(), 4, 3.0);
  std::mt19937_64 rng(5);
  auto xs = random_seq(rng, 40, 4, 4);
  for (Mat& x : xs) x *= 50.0;
  const auto out = net.forward(xs, net.zero_state(4));
  for (const Mat& h : out.h) EXPECT_LE(h.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Gru, StepMatchesHandEvaluation) {
  NetworkSpec s;
  s.input = 1;
  s.gru_hidden = 1;
  s.fc_hidden = 1;
  s.output = 1;
  s.fc_activation = Activation::linear;
  Network net(s);
  // W = [wz; wr; wn], U = [uz; ur; un], b = [bz; br; bn], fc w/b, out w/b
  Vec p(net.param_count());
  p << 0.3, -0.2, 0.5, 0.1, 0.4, -0.6, 0.05, -0.1, 0.2, 1.0, 0.0, 1.0, 0.0;
  net.set_params(p);
  const double x = 0.7, h = -0.4;
  const auto sig = [](double a) { return 1.0 / (1.0 + std::exp(-a)); };
  const double z = sig(0.3 * x + 0.1 * h + 0.05);
  const double r = sig(-0.2 * x + 0.4 * h - 0.1);
  const double n = std::tanh(0.5 * x - 0.6 * (r * h) + 0.2);
  const double expected = (1 - z) * n + z * h;
  const std::vector<Mat> xs{Mat::Constant(1, 1, x)};
  const auto out = net.forward(xs, Mat::Constant(1, 1, h));
  EXPECT_NEAR(out.h[0](0), expected, 1e-15);
  EXPECT_NEAR(out.y[0](0), expected, 1e-15);
}

TEST(Network, BatchColumnsAreIndependent) {
  const Network net = random_net(small_spec(), 6);
  std::mt19937_64 rng(7);
  const auto xs = random_seq(rng, 4, 4, 3);
  const auto batched = net.forward(xs, net.zero_state(3));
  for (int b = 0; b < 3; ++b) {
    std::vector<Mat> col;
    for (const Mat& x : xs) col.push_back(x.col(b));
    const auto single = net.forward(col, net.zero_state(1));
    for (int t = 0; t < 4; ++t) EXPECT_LT((single.y[t] - batched.y[t].col(b)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Network, ForwardIsRepeatable) {
  const Network net = random_net(small_spec(), 8);
  std::mt19937_64 rng(9);
  const auto xs = random_seq(rng, 5, 4, 2);
  const auto a = net.forward(xs, net.zero_state(2));
  const auto b = net.forward(xs, net.zero_state(2));
  for (int t = 0; t < 5; ++t) EXPECT_EQ(a.y[t], b.y[t]);
}

TEST(Network, ActorHeadSizeAndScaledTanhBound) {
  NetworkSpec s;
  s.input = 128;
  s.gru_hidden = 16;
  s.fc_hidden = 16;
  s.output = 124;
  s.output_activation = Activation::tanh;
  s.output_scale = Vec::Ones(124);
  s.output_scale.tail(4).setConstant(std::numbers::pi);
  const Network net = random_net(s, 10, 5.0);
  std::mt19937_64 rng(11);
  auto xs = random_seq(rng, 3, 128, 1);
  for (Mat& x : xs) x *= 10.0;
  const auto out = net.forward(xs, net.zero_state(1));
  EXPECT_EQ(out.y[0].rows(), 124);
  for (const Mat& y : out.y) {
    EXPECT_LE(y.topRows(120).cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LE(y.bottomRows(4).cwiseAbs().maxCoeff(), std::numbers::pi);
  }
}

TEST(Network, RejectsBadShapes) {
  const Network net(small_spec());
  const std::vector<Mat> wrong{Mat::Zero(5, 1)};
  EXPECT_THROW(net.forward(wrong, net.zero_state(1)), std::invalid_argument);
  const std::vector<Mat> ok{Mat::Zero(4, 1)};
  EXPECT_THROW(net.forward(ok, Mat::Zero(3, 1)), std::invalid_argument);
  EXPECT_THROW(Network(NetworkSpec{0, 8, 8, 1}), std::invalid_argument);
}

TEST(Backward, StaleCacheIsRejected) {
  Network net = random_net(small_spec(), 12);
  std::mt19937_64 rng(13);
  const auto xs = random_seq(rng, 2, 4, 1);
  Network::Cache cache;
  net.forward(xs, net.zero_state(1), &cache);
  sgd_step(net, Vec::Ones(net.param_count()), 0.1);
  const std::vector<Mat> dys(2, Mat::Zero(3, 1));
  EXPECT_THROW(net.backward(cache, dys), std::logic_error);
}

TEST(Backward, ZeroUpstreamGradientGivesZero) {
  const Network net = random_net(small_spec(), 14);
  std::mt19937_64 rng(15);
  const auto xs = random_seq(rng, 5, 4, 2);
  Network::Cache cache;
  net.forward(xs, net.zero_state(2), &cache);
  const std::vector<Mat> dys(5, Mat::Zero(3, 2));
  const auto g = net.backward(cache, dys);
  EXPECT_TRUE(g.params.isZero(0.0));
  EXPECT_TRUE(g.h0.isZero(0.0));
}

TEST(Backward, SequenceGradientIsSumOfPerStepGradients) {
  const Network net = random_net(small_spec(), 16);
  std::mt19937_64 rng(17);
  const auto xs = random_seq(rng, 5, 4, 2);
  const auto dys = random_seq(rng, 5, 3, 2);
  Network::Cache cache;
  net.forward(xs, net.zero_state(2), &cache);
  const Vec total = net.backward(cache, dys).params;
  Vec summed = Vec::Zero(net.param_count());
  for (int t = 0; t < 5; ++t) {
    std::vector<Mat> only(5, Mat::Zero(3, 2));
    only[t] = dys[t];
    summed += net.backward(cache, only).params;
  }
  EXPECT_LT((total - summed).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, total.cwiseAbs().maxCoeff()));
}

class BpttFiniteDifference : public ::testing::TestWithParam<std::tuple<Activation, Activation>> {};

TEST_P(BpttFiniteDifference, ParametersMatchCentralDifferences) {
  const auto [fc, out] = GetParam();
  const NetworkSpec spec = small_spec(fc, out);
  const Network net = random_net(spec, 18);
  std::mt19937_64 rng(19);
  const auto xs = random_seq(rng, 5, 4, 2);
  const Mat h0 = 0.3 * random_seq(rng, 1, 8, 2).front();
  const ProbeLoss probe = make_probe(rng, spec, 5, 2);
  const auto g = probe.grad(net, xs, h0);
  const auto rep = grad_check(
      net, [&](const Network& n) { return probe.value(n, xs, h0); }, g.params, 1e-4);
  EXPECT_TRUE(rep.passed) << "max rel error " << rep.max_rel_error << " at " << rep.worst_index;
  EXPECT_EQ(rep.checked, static_cast<std::size_t>(net.param_count()));
}

INSTANTIATE_TEST_SUITE_P(Activations, BpttFiniteDifference,
                         ::testing::Values(std::tuple{Activation::tanh, Activation::linear},
                                           std::tuple{Activation::relu, Activation::linear},
                                           std::tuple{Activation::linear, Activation::tanh}));

TEST(Backward, InputAndInitialStateGradientsMatchCentralDifferences) {
  const NetworkSpec spec = small_spec();
  const Network net = random_net(spec, 20);
  std::mt19937_64 rng(21);
  auto xs = random_seq(rng, 4, 4, 2);
  Mat h0 = 0.2 * random_seq(rng, 1, 8, 2).front();
  const ProbeLoss probe = make_probe(rng, spec, 4, 2);
  const auto g = probe.grad(net, xs, h0);
  const double eps = 1e-5;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-7}); };
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < xs[t].size(); ++i) {
      const double orig = xs[t](i);
      xs[t](i) = orig + eps;
      const double up = probe.value(net, xs, h0);
      xs[t](i) = orig - eps;
      const double down = probe.value(net, xs, h0);
      xs[t](i) = orig;
      EXPECT_LE(rel(g.inputs[t](i), (up - down) / (2 * eps)), 1e-4) << "t=" << t << " i=" << i;
    }
  }
  for (int i = 0; i < h0.size(); ++i) {
    const double orig = h0(i);
    h0(i) = orig + eps;
    const double up = probe.value(net, xs, h0);
    h0(i) = orig - eps;
    const double down = probe.value(net, xs, h0);
    h0(i) = orig;
    EXPECT_LE(rel(g.h0(i), (up - down) / (2 * eps)), 1e-4) << "h0 " << i;
  }
}

TEST(Sgd, ZeroLearningRateIsIdentity) {
  Vec p(3);
  p << 1.0, -2.0, 3.0;
  const Vec before = p;
  sgd_step(p, Vec::Constant(3, 7.0), 0.0);
  EXPECT_EQ(p, before);
}

TEST(Sgd, WorkedExample) {
  Vec p(1), g(1);
  p << 1.0;
  g << 2.0;
  sgd_step(p, g, 0.5);
  EXPECT_EQ(p(0), 0.0);
}

TEST(Sgd, TwoHalfStepsEqualOneFullStep) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec p(10), g(10);
  for (int i = 0; i < 10; ++i) {
    p(i) = n(rng);
    g(i) = n(rng);
  }
  Vec a = p, b = p;
  sgd_step(a, g, 0.3);
  sgd_step(b, g, 0.15);
  sgd_step(b, g, 0.15);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sgd, RejectsMismatchAndNegativeRate) {
  Vec p = Vec::Zero(3);
  EXPECT_THROW(sgd_step(p, Vec::Zero(2), 0.1), std::invalid_argument);
  EXPECT_THROW(sgd_step(p, Vec::Zero(3), -0.1), std::invalid_argument);
}

TEST(Sgd, ParameterCountSurvivesTraining) {
  Network net = random_net(small_spec(), 23);
  const auto count = net.param_count();
  SgdOptimizer opt{0.01};
  for (int k = 0; k < 20; ++k) opt.step(net, Vec::Ones(count));
  EXPECT_EQ(net.params().size(), count);
}

TEST(ClipNorm, RescalesOnlyAboveThreshold) {
  Vec g(2);
  g << 3.0, 4.0;
  EXPECT_EQ(clip_norm(g, 10.0), 5.0);
  EXPECT_EQ(g(0), 3.0);
  clip_norm(g, 1.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
  Vec h = g * 100.0;
  clip_norm(h, 0.0);
  EXPECT_NEAR(h.norm(), 100.0, 1e-12);
}

TEST(GradCheck, QuadraticLossIsExact) {
  Network net = random_net(small_spec(), 24);
  // Centre the bowl near the current point so round-off in the loss stays far below h^2.
  Vec c = net.params();
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) -= 0.01 * static_cast<double>(1 + k % 3);
  const auto loss = [&c](const Network& n) { return 0.5 * (n.params() - c).squaredNorm(); };
  const Vec analytic = net.params() - c;
  const auto rep = grad_check(net, loss, analytic, 1e-8);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.max_rel_error, 1e-8);
}

TEST(GradCheck, ReportsViolatingIndex) {
  Network net = random_net(small_spec(), 25);
  const auto loss = [](const Network& n) { return 0.5 * n.params().squaredNorm(); };
  Vec analytic = net.params();
  analytic(17) += 1.0;
  const auto rep = grad_check(net, loss, analytic, 1e-6);
  EXPECT_FALSE(rep.passed);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0], 17);
  EXPECT_EQ(rep.worst_index, 17);
}

TEST(GradCheck, SubsamplesWhenAsked) {
  Network net = random_net(small_spec(), 26);
  const auto loss = [](const Network& n) { return n.params().sum(); };
  const auto rep = grad_check(net, loss, Vec::Ones(net.param_count()), 1e-6, 25);
  EXPECT_EQ(rep.checked, 25u);
  EXPECT_TRUE(rep.passed);
}

TEST(GradCheck, ActorShapedNetwork) {
  NetworkSpec s;
  s.input = 12;  // N=2, M=2 state
  s.gru_hidden = 8;
  s.fc_hidden = 8;
  s.output = 18;
  s.fc_activation = Activation::relu;
  s.output_activation = Activation::tanh;
  s.output_scale = Vec::Ones(18);
  s.output_scale.tail(2).setConstant(std::numbers::pi);
  const Network net = random_net(s, 27);
  std::mt19937_64 rng(28);
  const auto xs = random_seq(rng, 5, 12, 3);
  const ProbeLoss probe = make_probe(rng, s, 5, 3);
  const Mat h0 = net.zero_state(3);
  const auto g = probe.grad(net, xs, h0);
  const auto rep = grad_check(net, [&](const Network& n) { return probe.value(n, xs, h0); }, g.params, 1e-4);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error << " at " << rep.worst_index;
}

}  // namespace
}  // namespace laeisac::nn
