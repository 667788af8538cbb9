#pragma once

// Episode-level FIFO replay, UAV-index permutation of stored episodes, and the
// decaying augmentation schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "laeisac/checkpoint.hpp"
#include "laeisac/env.hpp"
#include "laeisac/rng.hpp"

namespace laeisac {

/// One transition (S(t), A(t), r(t+1), S(t+1)). `h_in` / `h_next` are the actor's GRU
/// state before and after the step; only per-transition replay fills them.
struct Experience {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool terminal = false;
  Eigen::VectorXd h_in;
  Eigen::VectorXd h_next;
};

/// A whole episode stored once: T + 1 states, T raw actions, T rewards. Transitions are
/// materialized on demand so S(t+1) is not kept twice.
struct EpisodeRecord {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> rewards;
  std::vector<Eigen::VectorXd> actor_hidden;  // T + 1 entries or empty

  int length() const { return static_cast<int>(actions.size()); }

  void validate() const {
    if (states.size() != actions.size() + 1 || rewards.size() != actions.size()) {
      throw std::invalid_argument("EpisodeRecord: need T+1 states, T actions and T rewards");
    }
    if (!actor_hidden.empty() && actor_hidden.size() != states.size()) {
      throw std::invalid_argument("EpisodeRecord: actor hidden trace must have T+1 entries");
    }
  }

  /// Transition t, 0-based.
  Experience experience(int t) const {
    Experience e;
    e.s = states.at(static_cast<std::size_t>(t));
    e.a = actions.at(static_cast<std::size_t>(t));
    e.r = rewards.at(static_cast<std::size_t>(t));
    e.s_next = states.at(static_cast<std::size_t>(t) + 1);
    e.terminal = t + 1 == length();
    if (!actor_hidden.empty()) {
      e.h_in = actor_hidden[static_cast<std::size_t>(t)];
      e.h_next = actor_hidden[static_cast<std::size_t>(t) + 1];
    }
    return e;
  }

  bool operator==(const EpisodeRecord&) const = default;
};

/// Index maps for the UAV-indexed blocks: permuted[i] = original[map[i]]. A permutation
/// `perm` sends new UAV slot i to original UAV perm[i]; Hs and Ws blocks do not carry a
/// UAV index and map to themselves.
struct PermutationMaps {
  std::vector<int> state;
  std::vector<int> action;
};

inline bool is_permutation_of_range(std::span<const int> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(perm.size()) || seen[static_cast<std::size_t>(p)]) return false;
    seen[static_cast<std::size_t>(p)] = true;
  }
  return true;
}

inline PermutationMaps permutation_maps(const Layout& lay, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != lay.uavs || !is_permutation_of_range(perm)) {
    throw std::invalid_argument("permutation_maps: not a permutation of the UAV indices");
  }
  PermutationMaps maps;
  maps.state.resize(static_cast<std::size_t>(lay.state_dim()));
  maps.action.resize(static_cast<std::size_t>(lay.action_dim()));
  std::iota(maps.state.begin(), maps.state.end(), 0);
  std::iota(maps.action.begin(), maps.action.end(), 0);
  const int m = lay.uavs;
  for (int n = 0; n < lay.antennas; ++n) {
    for (int i = 0; i < m; ++i) {
      const int src = n * m + perm[static_cast<std::size_t>(i)];
      maps.state[lay.hc_re() + n * m + i] = lay.hc_re() + src;
      maps.state[lay.hc_im() + n * m + i] = lay.hc_im() + src;
      maps.action[lay.ac_re() + n * m + i] = lay.ac_re() + src;
      maps.action[lay.ac_im() + n * m + i] = lay.ac_im() + src;
    }
  }
  for (int i = 0; i < m; ++i) {
    const int src = perm[static_cast<std::size_t>(i)];
    maps.state[lay.positions() + 2 * i] = lay.positions() + 2 * src;
    maps.state[lay.positions() + 2 * i + 1] = lay.positions() + 2 * src + 1;
    maps.action[lay.headings() + i] = lay.headings() + src;
  }
  return maps;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& map) {
  if (v.size() != static_cast<Eigen::Index>(map.size())) throw std::invalid_argument("gather: length mismatch");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < map.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(map[i]);
  return out;
}

inline EpisodeRecord permute_record(const EpisodeRecord& rec, const PermutationMaps& maps) {
  EpisodeRecord out;
  out.states.reserve(rec.states.size());
  out.actions.reserve(rec.actions.size());
  for (const auto& s : rec.states) out.states.push_back(gather(s, maps.state));
  for (const auto& a : rec.actions) out.actions.push_back(gather(a, maps.action));
  out.rewards = rec.rewards;
  out.actor_hidden = rec.actor_hidden;
  return out;
}

inline EpisodeRecord permute_record(const EpisodeRecord& rec, std::span<const int> perm, const Layout& lay) {
  return permute_record(rec, permutation_maps(lay, perm));
}

inline std::vector<int> inverse_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

inline std::uint64_t factorial(int m) {
  if (m < 0 || m > 20) throw std::invalid_argument("factorial: argument out of range");
  std::uint64_t f = 1;
  for (int k = 2; k <= m; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

/// Lambda(omega) = floor((M! - 1) * zeta^omega)
inline std::uint64_t augmentation_count(int uavs, double zeta, std::uint64_t omega) {
  const double base = static_cast<double>(factorial(uavs) - 1);
  return static_cast<std::uint64_t>(std::floor(base * std::pow(zeta, static_cast<double>(omega))));
}

struct AugmentSchedule {
  double zeta = 0.999;
  int uavs = 4;
  std::uint64_t omega = 0;
  bool enabled = true;

  std::uint64_t count() const { return enabled ? augmentation_count(uavs, zeta, omega) : 0; }
  void advance() { ++omega; }
};

/// `count` distinct non-identity permutations of {0..M-1}, uniformly without replacement.
inline std::vector<std::vector<int>> random_permutations(int uavs, std::uint64_t count, Rng& rng) {
  const std::uint64_t available = factorial(uavs) - 1;
  if (count > available) throw std::invalid_argument("random_permutations: more than M! - 1 requested");
  std::vector<std::vector<int>> out;
  if (count == 0) return out;
  std::vector<int> p(static_cast<std::size_t>(uavs));
  std::iota(p.begin(), p.end(), 0);
  if (uavs <= 8) {
    std::vector<std::vector<int>> all;
    all.reserve(static_cast<std::size_t>(available));
    while (std::next_permutation(p.begin(), p.end())) all.push_back(p);
    for (std::uint64_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::uint64_t> pick(k, all.size() - 1);
      std::swap(all[k], all[pick(rng)]);
      out.push_back(all[k]);
    }
    return out;
  }
  const std::vector<int> identity = p;
  while (out.size() < count) {
    std::shuffle(p.begin(), p.end(), rng);
    if (p != identity && std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

class EpisodeBuffer {
 public:
  EpisodeBuffer(std::size_t capacity, int slots) : capacity_(capacity), slots_(slots) {
    if (capacity_ == 0) throw std::invalid_argument("EpisodeBuffer: capacity must be positive");
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }
  int slots() const { return slots_; }
  const EpisodeRecord& at(std::size_t i) const { return records_.at(i); }

  void push(EpisodeRecord rec) {
    rec.validate();
    if (rec.length() != slots_) {
      throw std::invalid_argument("EpisodeBuffer::push: record has " + std::to_string(rec.length()) +
                                  " transitions, expected " + std::to_string(slots_));
    }
    records_.push_back(std::move(rec));
    if (records_.size() > capacity_) records_.pop_front();
  }

  /// Indices of `n` records: with replacement while the buffer holds fewer than n,
  /// without replacement otherwise.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (records_.empty()) throw std::logic_error("EpisodeBuffer::sample: buffer is empty");
    std::vector<std::size_t> out;
    out.reserve(n);
    if (records_.size() < n) {
      std::uniform_int_distribution<std::size_t> u(0, records_.size() - 1);
      for (std::size_t k = 0; k < n; ++k) out.push_back(u(rng));
      return out;
    }
    std::vector<std::size_t> idx(records_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
      std::uniform_int_distribution<std::size_t> u(k, idx.size() - 1);
      std::swap(idx[k], idx[u(rng)]);
      out.push_back(idx[k]);
    }
    return out;
  }

  std::vector<EpisodeRecord> sample(std::size_t n, Rng& rng) const {
    std::vector<EpisodeRecord> out;
    for (std::size_t i : sample_indices(n, rng)) out.push_back(records_[i]);
    return out;
  }

  /// Flat transition draws for per-transition replay.
  std::vector<Experience> sample_transitions(std::size_t n, Rng& rng) const {
    if (records_.empty()) throw std::logic_error("EpisodeBuffer::sample_transitions: buffer is empty");
    const std::size_t total = records_.size() * static_cast<std::size_t>(slots_);
    std::uniform_int_distribution<std::size_t> u(0, total - 1);
    std::vector<Experience> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t flat = u(rng);
      out.push_back(records_[flat / static_cast<std::size_t>(slots_)].experience(
          static_cast<int>(flat % static_cast<std::size_t>(slots_))));
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    io::json header{{"capacity", capacity_}, {"slots", slots_}, {"records", records_.size()}};
    std::vector<double> data;
    Eigen::Index sd = 0, ad = 0, hd = 0;
    if (!records_.empty()) {
      sd = records_.front().states.front().size();
      ad = records_.front().actions.front().size();
      hd = records_.front().actor_hidden.empty() ? 0 : records_.front().actor_hidden.front().size();
    }
    header["state_dim"] = sd;
    header["action_dim"] = ad;
    header["hidden_dim"] = hd;
    auto append = [&data](const Eigen::VectorXd& v) { data.insert(data.end(), v.data(), v.data() + v.size()); };
    for (const auto& r : records_) {
      for (const auto& s : r.states) append(s);
      for (const auto& a : r.actions) append(a);
      data.insert(data.end(), r.rewards.begin(), r.rewards.end());
      for (const auto& h : r.actor_hidden) append(h);
    }
    io::write_blob(path, io::kBufferMagic, header, data);
  }

  static EpisodeBuffer load(const std::filesystem::path& path) {
    const io::Blob b = io::read_blob(path, io::kBufferMagic);
    EpisodeBuffer buf(b.header.at("capacity").get<std::size_t>(), b.header.at("slots").get<int>());
    const auto sd = b.header.at("state_dim").get<Eigen::Index>();
    const auto ad = b.header.at("action_dim").get<Eigen::Index>();
    const auto hd = b.header.at("hidden_dim").get<Eigen::Index>();
    const auto count = b.header.at("records").get<std::size_t>();
    const std::size_t t = static_cast<std::size_t>(buf.slots_);
    std::size_t pos = 0;
    auto take = [&](Eigen::Index n) {
      if (pos + static_cast<std::size_t>(n) > b.data.size()) throw std::runtime_error("EpisodeBuffer::load: truncated");
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(b.data.data() + pos, n);
      pos += static_cast<std::size_t>(n);
      return v;
    };
    for (std::size_t k = 0; k < count; ++k) {
      EpisodeRecord r;
      for (std::size_t i = 0; i <= t; ++i) r.states.push_back(take(sd));
      for (std::size_t i = 0; i < t; ++i) r.actions.push_back(take(ad));
      const Eigen::VectorXd rw = take(static_cast<Eigen::Index>(t));
      r.rewards.assign(rw.data(), rw.data() + rw.size());
      if (hd > 0) {
        for (std::size_t i = 0; i <= t; ++i) r.actor_hidden.push_back(take(hd));
      }
      buf.push(std::move(r));
    }
    return buf;
  }

 private:
  std::size_t capacity_;
  int slots_;
  std::deque<EpisodeRecord> records_;
};

/// n sampled records followed by Lambda(omega) distinct non-identity permutations of each
/// (drawn independently per record); omega advances afterwards.
inline std::vector<EpisodeRecord> augmented_minibatch(const EpisodeBuffer& buf, AugmentSchedule& sched, std::size_t n,
                                                      const Layout& lay, Rng& rng) {
  std::vector<EpisodeRecord> batch = buf.sample(n, rng);
  const std::uint64_t lambda = sched.count();
  sched.advance();
  if (lambda == 0) return batch;
  batch.reserve(batch.size() * static_cast<std::size_t>(1 + lambda));
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& perm : random_permutations(lay.uavs, lambda, rng)) {
      batch.push_back(permute_record(batch[k], perm, lay));
    }
  }
  return batch;
}

}  // namespace laeisac
