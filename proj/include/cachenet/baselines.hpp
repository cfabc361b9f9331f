#ifndef CACHENET_BASELINES_HPP
#define CACHENET_BASELINES_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <list>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachenet/instance.hpp"
#include "cachenet/projection.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

enum class EvictionPolicy { lru, lfu, fifo, rr };

inline EvictionPolicy eviction_policy_from_string(const std::string& s) {
  if (s == "lru") return EvictionPolicy::lru;
  if (s == "lfu") return EvictionPolicy::lfu;
  if (s == "fifo") return EvictionPolicy::fifo;
  if (s == "rr") return EvictionPolicy::rr;
  throw std::invalid_argument("unknown eviction policy: " + s);
}

// Single cache with a classical eviction policy. LFU counters are per cache
// and never decay; FIFO orders by insertion, not access; RR evicts a uniform
// victim from the supplied stream.
class EvictionCache {
 public:
  EvictionCache() = default;
  EvictionCache(EvictionPolicy policy, int capacity, int catalog)
      : policy_(policy), capacity_(capacity), present_(catalog, 0), freq_(catalog, 0) {}

  bool contains(int item) const { return present_[item] != 0; }
  int size() const { return static_cast<int>(order_.size()); }
  int capacity() const { return capacity_; }

  std::vector<std::uint8_t> contents_flags() const { return present_; }

  // Bookkeeping for a request touching an item already in the cache.
  void touch(int item) {
    ++freq_[item];
    if (!present_[item]) return;
    if (policy_ == EvictionPolicy::lru)
      order_.splice(order_.begin(), order_, iter_of(item));
  }

  // Inserts an item (path replication), evicting per policy when full.
  // No-op when the item is present or the cache has no slots.
  void insert(int item, Rng& rng) {
    ++freq_[item];
    if (capacity_ == 0 || present_[item]) return;
    if (size() >= capacity_) evict(rng);
    order_.push_front(item);
    present_[item] = 1;
  }

 private:
  std::list<int>::iterator iter_of(int item) {
    for (auto it = order_.begin(); it != order_.end(); ++it)
      if (*it == item) return it;
    throw std::logic_error("cache bookkeeping out of sync");
  }

  void evict(Rng& rng) {
    std::list<int>::iterator victim = order_.end();
    switch (policy_) {
      case EvictionPolicy::lru:
      case EvictionPolicy::fifo:
        victim = std::prev(order_.end());  // back = least recent / oldest insert
        break;
      case EvictionPolicy::rr: {
        victim = order_.begin();
        std::advance(victim, rng.uniform_int(size()));
        break;
      }
      case EvictionPolicy::lfu: {
        long best = std::numeric_limits<long>::max();
        int best_item = std::numeric_limits<int>::max();
        for (auto it = order_.begin(); it != order_.end(); ++it) {
          if (freq_[*it] < best || (freq_[*it] == best && *it < best_item)) {
            best = freq_[*it];
            best_item = *it;
            victim = it;
          }
        }
        break;
      }
    }
    present_[*victim] = 0;
    order_.erase(victim);
  }

  EvictionPolicy policy_ = EvictionPolicy::lru;
  int capacity_ = 0;
  std::vector<std::uint8_t> present_;
  std::vector<long> freq_;
  std::list<int> order_;  // front = most recent insertion/use
};

// Route-to-nearest-server: per class, the least raw-weight path, ties going
// to the lowest index.
inline std::vector<int> route_rns(const ProblemInstance& inst) {
  std::vector<int> route(inst.classes.size(), 0);
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < inst.classes[ci].paths.size(); ++j) {
      const double c = path_cost(inst, inst.classes[ci].paths[j]);
      if (c < best) {
        best = c;
        route[ci] = static_cast<int>(j);
      }
    }
  }
  return route;
}

// Uniform routing marginals over each class's path set.
inline std::vector<std::vector<double>> route_uniform(const ProblemInstance& inst) {
  std::vector<std::vector<double>> probs(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const std::size_t n = inst.classes[ci].paths.size();
    probs[ci].assign(n, 1.0 / static_cast<double>(n));
  }
  return probs;
}

inline std::vector<std::vector<double>> route_onehot(const ProblemInstance& inst,
                                                     const std::vector<int>& route) {
  std::vector<std::vector<double>> probs(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    probs[ci].assign(inst.classes[ci].paths.size(), 0.0);
    probs[ci][route[ci]] = 1.0;
  }
  return probs;
}

// Adaptive routing baseline: per slot, each class tracks the average cost
// observed on each path it used; at the slot boundary the probabilities move
// against those averages and project back to the simplex.
class DynamicRouter {
 public:
  DynamicRouter() = default;
  DynamicRouter(const ProblemInstance& inst, double eta)
      : eta_(eta), probs_(route_uniform(inst)) {
    cost_sums_.resize(inst.classes.size());
    counts_.resize(inst.classes.size());
    for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
      cost_sums_[ci].assign(inst.classes[ci].paths.size(), 0.0);
      counts_[ci].assign(inst.classes[ci].paths.size(), 0);
    }
  }

  const std::vector<std::vector<double>>& probs() const { return probs_; }

  int sample(std::size_t class_index, Rng& rng) {
    return rng.categorical(probs_[class_index]);
  }

  void observe(std::size_t class_index, int path, double cost) {
    cost_sums_[class_index][path] += cost;
    counts_[class_index][path]++;
  }

  // Paths with no samples this slot get a zero adjustment.
  void end_slot() {
    for (std::size_t ci = 0; ci < probs_.size(); ++ci) {
      auto& p = probs_[ci];
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (counts_[ci][j] > 0) p[j] -= eta_ * cost_sums_[ci][j] / counts_[ci][j];
        cost_sums_[ci][j] = 0.0;
        counts_[ci][j] = 0;
      }
      p = project_simplex(p);
    }
  }

 private:
  double eta_ = 0.01;
  std::vector<std::vector<double>> probs_;
  std::vector<std::vector<double>> cost_sums_;
  std::vector<std::vector<int>> counts_;
};

struct ServeOutcome {
  double cost = 0.0;
  int hit_position = 0;  // path position where the item was found
};

// Serves one request over a chosen path: walk upstream to the first node
// holding the item (a designated server at the latest), pay the reverse-edge
// weights, and replicate the item into every downstream cache.
inline ServeOutcome serve_request(const ProblemInstance& inst, int item, const Path& p,
                                  std::vector<EvictionCache>& caches, Rng& rng) {
  ServeOutcome out;
  std::size_t hit = p.size() - 1;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (caches[p[k]].contains(item) || inst.item_served_by(item, p[k])) {
      hit = k;
      break;
    }
  }
  out.hit_position = static_cast<int>(hit);
  for (std::size_t k = 0; k < hit; ++k) out.cost += inst.edge_weight(p[k + 1], p[k]);
  if (caches[p[hit]].contains(item)) caches[p[hit]].touch(item);
  for (std::size_t k = hit; k-- > 0;) caches[p[k]].insert(item, rng);
  return out;
}

}  // namespace cachenet

#endif  // CACHENET_BASELINES_HPP
