#pragma once

// Finite-difference checks of the training gradients on a reduced problem
// (hidden width 8, N = 2, M = 2, T = 5), shared by the command-line tool.

#include <random>
#include <string>
#include <vector>

#include "laeisac/agent.hpp"
#include "laeisac/nn.hpp"

namespace laeisac {

struct GradientCase {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

inline std::vector<GradientCase> gradient_suite(std::uint64_t seed = 1, double tol = 1e-4, int hidden = 8) {
  const Layout lay{2, 2};
  const int slots = 5, batch = 3;
  Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<EpisodeRecord> recs(static_cast<std::size_t>(batch));
  for (auto& r : recs) {
    for (int t = 0; t <= slots; ++t) r.states.push_back(Vec::NullaryExpr(lay.state_dim(), [&] { return g(rng); }));
    for (int t = 0; t < slots; ++t) {
      r.actions.push_back(Vec::NullaryExpr(lay.action_dim(), [&] { return g(rng); }));
      r.rewards.push_back(g(rng));
    }
  }
  const Batch b = make_batch(recs, false);
  auto make = [&](const nn::NetworkSpec& spec) {
    Network n(spec);
    n.init_uniform(rng);
    return n;
  };
  const Network actor = make(actor_spec(lay, hidden, hidden));
  const Network critic = make(critic_spec(lay, hidden, hidden));
  const Network target_actor = make(actor_spec(lay, hidden, hidden));
  const Network target_critic = make(critic_spec(lay, hidden, hidden));
  const Mat z = critic_targets(b, target_actor, target_critic, 1.0, 1.0);

  std::vector<GradientCase> out;
  auto record = [&](std::string name, const nn::GradCheckReport& r) {
    out.push_back(GradientCase{std::move(name), r.max_rel_error, r.checked, r.passed});
  };
  record("critic loss / critic parameters",
         nn::grad_check(critic, [&](const Network& c) { return critic_loss_and_grad(c, b, z).value; },
                        critic_loss_and_grad(critic, b, z).grad, tol));
  record("actor objective / actor parameters",
         nn::grad_check(actor, [&](const Network& a) { return actor_objective_and_grad(a, critic, b).value; },
                        actor_objective_and_grad(actor, critic, b).grad, tol));
  return out;
}

}  // namespace laeisac
