#pragma once

// A fixed-topology recurrent network, input -> GRU -> dense -> output head, evaluated
// on batches of sequences (one column per sequence) with hand-written backpropagation
// through time. All parameters live in one flat vector so optimizers, soft updates and
// checkpoints treat a network as a single array.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace laeisac::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation { linear, relu, tanh };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

struct NetworkSpec {
  int input = 1;
  int gru_hidden = 128;
  int fc_hidden = 128;
  int output = 1;
  Activation fc_activation = Activation::relu;
  Activation output_activation = Activation::linear;
  Vec output_scale;  // per-output multiplier applied after the activation; empty means 1
};

namespace detail {

inline Mat sigmoid(const Mat& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

inline void activate(Mat& a, Activation act) {
  switch (act) {
    case Activation::linear: break;
    case Activation::relu: a = a.cwiseMax(0.0); break;
    case Activation::tanh: a = a.array().tanh().matrix(); break;
  }
}

/// Derivative expressed through the activation's output value.
inline void scale_by_derivative(Mat& grad, const Mat& out, Activation act) {
  switch (act) {
    case Activation::linear: break;
    case Activation::relu: grad.array() *= (out.array() > 0.0).cast<double>(); break;
    case Activation::tanh: grad.array() *= 1.0 - out.array().square(); break;
  }
}

}  // namespace detail

class Network {
 public:
  struct StepCache {
    Mat x, h_prev, z, r, n, rh, h, f, o;
  };

  struct Cache {
    std::vector<StepCache> steps;
    std::uint64_t version = 0;
  };

  struct Output {
    std::vector<Mat> y;  // per step, output x batch
    std::vector<Mat> h;  // per step, GRU state after the step
  };

  struct Gradients {
    Vec params;
    std::vector<Mat> inputs;  // dL/dx per step
    Mat h0;                   // dL/dh0
  };

  Network() = default;

  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    if (spec_.input < 1 || spec_.gru_hidden < 1 || spec_.fc_hidden < 1 || spec_.output < 1) {
      throw std::invalid_argument("NetworkSpec: every layer needs at least one unit");
    }
    if (spec_.output_scale.size() == 0) spec_.output_scale = Vec::Ones(spec_.output);
    if (spec_.output_scale.size() != spec_.output) {
      throw std::invalid_argument("NetworkSpec: output_scale length != output size");
    }
    const int i = spec_.input, h = spec_.gru_hidden, f = spec_.fc_hidden, o = spec_.output;
    off_gru_w_ = 0;
    off_gru_u_ = off_gru_w_ + 3 * h * i;
    off_gru_b_ = off_gru_u_ + 3 * h * h;
    off_fc_w_ = off_gru_b_ + 3 * h;
    off_fc_b_ = off_fc_w_ + f * h;
    off_out_w_ = off_fc_b_ + f;
    off_out_b_ = off_out_w_ + o * f;
    count_ = off_out_b_ + o;
    params_ = Vec::Zero(count_);
  }

  const NetworkSpec& spec() const { return spec_; }
  Eigen::Index param_count() const { return count_; }
  int input_size() const { return spec_.input; }
  int hidden_size() const { return spec_.gru_hidden; }
  int output_size() const { return spec_.output; }

  const Vec& params() const { return params_; }
  /// Mutable access invalidates outstanding caches.
  Vec& mutable_params() {
    ++version_;
    return params_;
  }
  void set_params(const Vec& p) {
    if (p.size() != count_) throw std::invalid_argument("Network::set_params: length mismatch");
    mutable_params() = p;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void init_uniform(std::mt19937_64& rng) {
    Vec& p = mutable_params();
    p.setZero();
    auto fill = [&](Eigen::Index off, Eigen::Index rows, Eigen::Index cols, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index k = 0; k < rows * cols; ++k) p(off + k) = u(rng);
    };
    const int i = spec_.input, h = spec_.gru_hidden, f = spec_.fc_hidden, o = spec_.output;
    fill(off_gru_w_, 3 * h, i, i);
    fill(off_gru_u_, 3 * h, h, h);
    fill(off_fc_w_, f, h, h);
    fill(off_out_w_, o, f, f);
  }

  Mat zero_state(Eigen::Index batch) const { return Mat::Zero(spec_.gru_hidden, batch); }

  Output forward(std::span<const Mat> xs, const Mat& h0, Cache* cache = nullptr) const {
    const int h = spec_.gru_hidden;
    const auto gw = block(off_gru_w_, 3 * h, spec_.input);
    const auto gu = block(off_gru_u_, 3 * h, h);
    const auto gb = vec(off_gru_b_, 3 * h);
    const auto fw = block(off_fc_w_, spec_.fc_hidden, h);
    const auto fb = vec(off_fc_b_, spec_.fc_hidden);
    const auto ow = block(off_out_w_, spec_.output, spec_.fc_hidden);
    const auto ob = vec(off_out_b_, spec_.output);

    if (h0.rows() != h) throw std::invalid_argument("Network::forward: h0 has wrong height");
    Output out;
    out.y.reserve(xs.size());
    out.h.reserve(xs.size());
    if (cache) {
      cache->steps.clear();
      cache->steps.reserve(xs.size());
      cache->version = version_;
    }
    Mat hp = h0;
    for (const Mat& x : xs) {
      if (x.rows() != spec_.input || x.cols() != h0.cols()) {
        throw std::invalid_argument("Network::forward: input is " + std::to_string(x.rows()) + "x" +
                                    std::to_string(x.cols()) + ", expected " +
                                    std::to_string(spec_.input) + "x" + std::to_string(h0.cols()));
      }
      Mat ax = gw * x;
      ax.colwise() += gb;
      Mat zr = ax.topRows(2 * h);
      zr.noalias() += gu.topRows(2 * h) * hp;
      const Mat z = detail::sigmoid(zr.topRows(h));
      const Mat r = detail::sigmoid(zr.bottomRows(h));
      const Mat rh = r.cwiseProduct(hp);
      Mat n = ax.bottomRows(h);
      n.noalias() += gu.bottomRows(h) * rh;
      n = n.array().tanh().matrix();
      Mat hn = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(hp);

      Mat f = fw * hn;
      f.colwise() += fb;
      detail::activate(f, spec_.fc_activation);
      Mat o = ow * f;
      o.colwise() += ob;
      detail::activate(o, spec_.output_activation);
      out.y.push_back(spec_.output_scale.asDiagonal() * o);
      out.h.push_back(hn);

      if (cache) cache->steps.push_back(StepCache{x, hp, z, r, n, rh, hn, f, o});
      hp = std::move(hn);
    }
    return out;
  }

  /// Backpropagation through time. `dys[t]` is dL/dy at step t (same shape as the
  /// forward output); `dh_final`, when given, is an extra gradient on the last state.
  Gradients backward(const Cache& cache, std::span<const Mat> dys, const Mat* dh_final = nullptr) const {
    if (cache.version != version_) throw std::logic_error("Network::backward: stale cache");
    if (dys.size() != cache.steps.size()) {
      throw std::invalid_argument("Network::backward: gradient sequence length mismatch");
    }
    const int h = spec_.gru_hidden;
    const auto gw = block(off_gru_w_, 3 * h, spec_.input);
    const auto gu = block(off_gru_u_, 3 * h, h);
    const auto fw = block(off_fc_w_, spec_.fc_hidden, h);
    const auto ow = block(off_out_w_, spec_.output, spec_.fc_hidden);

    Gradients g;
    g.params = Vec::Zero(count_);
    auto d_gw = mblock(g.params, off_gru_w_, 3 * h, spec_.input);
    auto d_gu = mblock(g.params, off_gru_u_, 3 * h, h);
    auto d_gb = mvec(g.params, off_gru_b_, 3 * h);
    auto d_fw = mblock(g.params, off_fc_w_, spec_.fc_hidden, h);
    auto d_fb = mvec(g.params, off_fc_b_, spec_.fc_hidden);
    auto d_ow = mblock(g.params, off_out_w_, spec_.output, spec_.fc_hidden);
    auto d_ob = mvec(g.params, off_out_b_, spec_.output);

    g.inputs.resize(cache.steps.size());
    const Eigen::Index batch = cache.steps.empty() ? 0 : cache.steps.front().x.cols();
    Mat dh_next = Mat::Zero(h, batch);
    if (dh_final) dh_next = *dh_final;

    Mat da(3 * h, batch);
    for (std::size_t t = cache.steps.size(); t-- > 0;) {
      const StepCache& c = cache.steps[t];
      if (dys[t].rows() != spec_.output || dys[t].cols() != batch) {
        throw std::invalid_argument("Network::backward: output gradient has wrong shape");
      }
      Mat d_o = spec_.output_scale.asDiagonal() * dys[t];
      detail::scale_by_derivative(d_o, c.o, spec_.output_activation);
      d_ow.noalias() += d_o * c.f.transpose();
      d_ob += d_o.rowwise().sum();

      Mat d_f = ow.transpose() * d_o;
      detail::scale_by_derivative(d_f, c.f, spec_.fc_activation);
      d_fw.noalias() += d_f * c.h.transpose();
      d_fb += d_f.rowwise().sum();

      Mat dh = fw.transpose() * d_f;
      dh += dh_next;

      // h = (1 - z) * n + z * h_prev
      const Mat dn = dh.cwiseProduct((1.0 - c.z.array()).matrix());
      const Mat dz = dh.cwiseProduct(c.h_prev - c.n);
      Mat dh_prev = dh.cwiseProduct(c.z);

      auto da_z = da.topRows(h);
      auto da_r = da.middleRows(h, h);
      auto da_n = da.bottomRows(h);
      da_n = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
      const Mat d_rh = gu.bottomRows(h).transpose() * da_n;
      const Mat dr = d_rh.cwiseProduct(c.h_prev);
      dh_prev += d_rh.cwiseProduct(c.r);
      da_z = dz.cwiseProduct((c.z.array() * (1.0 - c.z.array())).matrix());
      da_r = dr.cwiseProduct((c.r.array() * (1.0 - c.r.array())).matrix());

      d_gw.noalias() += da * c.x.transpose();
      d_gb += da.rowwise().sum();
      d_gu.topRows(2 * h).noalias() += da.topRows(2 * h) * c.h_prev.transpose();
      d_gu.bottomRows(h).noalias() += da_n * c.rh.transpose();
      dh_prev.noalias() += gu.topRows(2 * h).transpose() * da.topRows(2 * h);

      g.inputs[t] = gw.transpose() * da;
      dh_next = std::move(dh_prev);
    }
    g.h0 = std::move(dh_next);
    return g;
  }

 private:
  using CMap = Eigen::Map<const Mat>;
  using CVMap = Eigen::Map<const Vec>;

  CMap block(Eigen::Index off, Eigen::Index rows, Eigen::Index cols) const {
    return CMap(params_.data() + off, rows, cols);
  }
  CVMap vec(Eigen::Index off, Eigen::Index n) const { return CVMap(params_.data() + off, n); }
  static Eigen::Map<Mat> mblock(Vec& v, Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<Mat>(v.data() + off, rows, cols);
  }
  static Eigen::Map<Vec> mvec(Vec& v, Eigen::Index off, Eigen::Index n) {
    return Eigen::Map<Vec>(v.data() + off, n);
  }

  NetworkSpec spec_;
  Vec params_;
  Eigen::Index count_ = 0;
  Eigen::Index off_gru_w_ = 0, off_gru_u_ = 0, off_gru_b_ = 0;
  Eigen::Index off_fc_w_ = 0, off_fc_b_ = 0, off_out_w_ = 0, off_out_b_ = 0;
  std::uint64_t version_ = 0;
};

/// params <- params - lr * grads
inline void sgd_step(Vec& params, const Vec& grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: length mismatch");
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  params -= lr * grads;
}

inline void sgd_step(Network& net, const Vec& grads, double lr) { sgd_step(net.mutable_params(), grads, lr); }

/// Rescales `g` in place so its 2-norm is at most `max_norm` (no-op when max_norm <= 0).
inline double clip_norm(Vec& g, double max_norm) {
  const double n = g.norm();
  if (max_norm > 0.0 && n > max_norm) g *= max_norm / n;
  return n;
}

struct SgdOptimizer {
  double learning_rate = 1e-4;
  void step(Network& net, const Vec& grads) const { sgd_step(net, grads, learning_rate); }
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
  std::vector<Eigen::Index> violations;
  bool passed = true;
};

/// Central differences against an analytic gradient. `loss` is evaluated on a scratch
/// copy of `net` with one parameter nudged at a time; at most `max_params` indices are
/// probed (all of them when the network is smaller). Relative error is
/// |a - n| / max(|a|, |n|, abs_floor).
inline GradCheckReport grad_check(const Network& net, const std::function<double(const Network&)>& loss,
                                  const Vec& analytic, double tol, std::size_t max_params = 0,
                                  std::uint64_t seed = 7, double step = 1e-5, double abs_floor = 1e-7) {
  if (analytic.size() != net.param_count()) throw std::invalid_argument("grad_check: gradient length mismatch");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(net.param_count()));
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<Eigen::Index>(k);
  if (max_params > 0 && max_params < idx.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_params);
  }
  GradCheckReport rep;
  Network probe = net;
  for (Eigen::Index k : idx) {
    const double orig = net.params()(k);
    probe.mutable_params()(k) = orig + step;
    const double up = loss(probe);
    probe.mutable_params()(k) = orig - step;
    const double down = loss(probe);
    probe.mutable_params()(k) = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic(k);
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
    ++rep.checked;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = k;
    }
    if (rel > tol) {
      rep.violations.push_back(k);
      rep.passed = false;
    }
  }
  return rep;
}

}  // namespace laeisac::nn
