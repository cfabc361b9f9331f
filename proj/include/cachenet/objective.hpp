#ifndef CACHENET_OBJECTIVE_HPP
#define CACHENET_OBJECTIVE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cachenet/instance.hpp"

namespace cachenet {

// Partial derivatives of the concave surrogate, grouped like the state:
// route_grad entries are non-positive (raising a path's probability can only
// lower the surrogate's slack terms), cache_grad entries are non-negative.
struct SubgradientPair {
  std::vector<std::vector<double>> route_grad;  // per class, over its paths
  std::vector<std::vector<double>> cache_grad;  // per node, over items
};

// Cost with every cache empty, summed over ALL candidate paths. This is the
// additive constant that turns cost minimization into gain maximization.
inline double empty_cache_cost(const ProblemInstance& inst) {
  double total = 0.0;
  for (const RequestClass& rc : inst.classes)
    for (const Path& p : rc.paths) total += rc.rate * path_cost(inst, p);
  return total;
}

namespace detail {

// Expected cost of one class under marginals: for each path, an edge's
// weight counts only if the path is taken and every cache at or before the
// edge's downstream node misses.
inline double class_cost(const ProblemInstance& inst, const RequestClass& rc,
                         const std::vector<double>& route_probs,
                         const std::vector<std::vector<double>>& cache_probs) {
  double acc = 0.0;
  for (std::size_t j = 0; j < rc.paths.size(); ++j) {
    const double rp = route_probs[j];
    if (rp == 0.0) continue;
    const Path& p = rc.paths[j];
    double miss = 1.0;
    double path_acc = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      miss *= 1.0 - cache_probs[p[k]][rc.item];
      path_acc += inst.edge_weight(p[k + 1], p[k]) * miss;
    }
    acc += rp * path_acc;
  }
  return rc.rate * acc;
}

}  // namespace detail

inline double expected_cost(const ProblemInstance& inst, const FractionalState& s,
                            bool check_feasible = true) {
  if (check_feasible && !is_feasible(inst, s))
    throw std::invalid_argument("expected_cost: infeasible fractional state");
  double total = 0.0;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
    total += detail::class_cost(inst, inst.classes[ci], s.route_probs[ci], s.cache_probs);
  return total;
}

inline double expected_cost(const ProblemInstance& inst, const IntegralStrategy& s) {
  if (!is_feasible(inst, s))
    throw std::invalid_argument("expected_cost: infeasible integral strategy");
  return expected_cost(inst, lift(inst, s), false);
}

// Caching gain: empty-cache cost minus expected cost. Non-negative for any
// feasible state.
inline double caching_gain(const ProblemInstance& inst, const FractionalState& s,
                           bool check_feasible = true) {
  return empty_cache_cost(inst) - expected_cost(inst, s, check_feasible);
}

inline double caching_gain(const ProblemInstance& inst, const IntegralStrategy& s) {
  return empty_cache_cost(inst) - expected_cost(inst, s);
}

// Concave surrogate of the caching gain. Each edge term replaces the product
// of misses with the clipped linear slack min{1, 1 - rho_p + sum of cache
// marginals up to the edge}. Sandwiched between (1-1/e) and 1 times the gain.
inline double surrogate_gain(const ProblemInstance& inst, const FractionalState& s,
                             bool check_feasible = true) {
  if (check_feasible && !is_feasible(inst, s))
    throw std::invalid_argument("surrogate_gain: infeasible fractional state");
  double total = 0.0;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      double cum = 1.0 - s.route_probs[ci][j];
      double acc = 0.0;
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        cum += s.cache_probs[p[k]][rc.item];
        acc += inst.edge_weight(p[k + 1], p[k]) * std::min(1.0, cum);
      }
      total += rc.rate * acc;
    }
  }
  return total;
}

// Upper partial derivatives of the surrogate (ties at the clip resolved with
// <=, matching the expectation of the control-message estimators). Where the
// surrogate is differentiable this is the gradient.
inline SubgradientPair surrogate_subgradient(const ProblemInstance& inst,
                                             const FractionalState& s,
                                             bool check_feasible = true) {
  if (check_feasible && !is_feasible(inst, s))
    throw std::invalid_argument("surrogate_subgradient: infeasible fractional state");
  SubgradientPair g;
  g.route_grad.resize(inst.classes.size());
  g.cache_grad.assign(inst.node_count, std::vector<double>(inst.item_count, 0.0));
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    g.route_grad[ci].assign(rc.paths.size(), 0.0);
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      const std::size_t hops = p.size() - 1;
      // active_weight[k] = edge weight if the clip is inactive at hop k
      std::vector<double> active_weight(hops, 0.0);
      double cum = 1.0 - s.route_probs[ci][j];
      for (std::size_t k = 0; k < hops; ++k) {
        cum += s.cache_probs[p[k]][rc.item];
        if (cum <= 1.0) active_weight[k] = inst.edge_weight(p[k + 1], p[k]);
      }
      // suffix sums: node at position m sees all active edges at or above it
      double suffix = 0.0;
      std::vector<double> upstream(hops, 0.0);
      for (std::size_t k = hops; k-- > 0;) {
        suffix += active_weight[k];
        upstream[k] = suffix;
      }
      for (std::size_t m = 0; m < hops; ++m)
        g.cache_grad[p[m]][rc.item] += rc.rate * upstream[m];
      g.route_grad[ci][j] = -rc.rate * (hops ? upstream[0] : 0.0);
    }
  }
  return g;
}

}  // namespace cachenet

#endif  // CACHENET_OBJECTIVE_HPP
