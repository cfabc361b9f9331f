#ifndef CACHENET_OFFLINE_HPP
#define CACHENET_OFFLINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachenet/instance.hpp"
#include "cachenet/objective.hpp"
#include "cachenet/projection.hpp"

namespace cachenet {

struct RelaxationResult {
  FractionalState state;
  double value = 0.0;   // surrogate value at state
  int iterations = 0;
  bool hit_max_iters = false;
};

namespace detail {

inline void ascend_in_place(const ProblemInstance& inst, FractionalState& s,
                            const SubgradientPair& g, double step) {
  for (std::size_t ci = 0; ci < s.route_probs.size(); ++ci) {
    auto& r = s.route_probs[ci];
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += step * g.route_grad[ci][j];
    r = project_simplex(r);
  }
  for (int v = 0; v < inst.node_count; ++v) {
    auto& xi = s.cache_probs[v];
    for (int i = 0; i < inst.item_count; ++i) xi[i] += step * g.cache_grad[v][i];
    xi = project_capped_simplex(xi, inst.capacity[v]);
  }
}

inline double grad_norm(const SubgradientPair& g) {
  double s = 0.0;
  for (const auto& r : g.route_grad)
    for (double x : r) s += x * x;
  for (const auto& z : g.cache_grad)
    for (double x : z) s += x * x;
  return std::sqrt(s);
}

inline void axpy_state(FractionalState& acc, const FractionalState& s, double a) {
  for (std::size_t ci = 0; ci < acc.route_probs.size(); ++ci)
    for (std::size_t j = 0; j < acc.route_probs[ci].size(); ++j)
      acc.route_probs[ci][j] += a * s.route_probs[ci][j];
  for (std::size_t v = 0; v < acc.cache_probs.size(); ++v)
    for (std::size_t i = 0; i < acc.cache_probs[v].size(); ++i)
      acc.cache_probs[v][i] += a * s.cache_probs[v][i];
}

inline FractionalState scaled_state(const FractionalState& s, double a) {
  FractionalState out = s;
  for (auto& r : out.route_probs)
    for (double& x : r) x *= a;
  for (auto& xi : out.cache_probs)
    for (double& x : xi) x *= a;
  return out;
}

inline FractionalState zero_like(const FractionalState& s) {
  FractionalState out = s;
  for (auto& r : out.route_probs) std::fill(r.begin(), r.end(), 0.0);
  for (auto& xi : out.cache_probs) std::fill(xi.begin(), xi.end(), 0.0);
  return out;
}

inline std::size_t state_dim(const FractionalState& s) {
  std::size_t d = 0;
  for (const auto& r : s.route_probs) d += r.size();
  for (const auto& xi : s.cache_probs) d += xi.size();
  return d;
}

}  // namespace detail

// Maximizes the concave surrogate over the relaxed feasible set with
// projected subgradient ascent, step gamma0/sqrt(k), evaluating candidates
// through the sliding window average over iterates [k/2, k]. Stops when the
// averaged value improves by less than tol (relative) across a 50-iteration
// checkpoint. gamma0 <= 0 selects a scale-aware default.
inline RelaxationResult solve_relaxation(const ProblemInstance& inst, double tol = 1e-6,
                                         int max_iters = 20000, double gamma0 = 0.0) {
  RelaxationResult res;
  FractionalState raw = uniform_state(inst);

  if (gamma0 <= 0.0) {
    const double g0 = detail::grad_norm(surrogate_subgradient(inst, raw, false));
    if (g0 == 0.0) {  // constant objective (e.g. empty demand)
      res.state = raw;
      res.value = surrogate_gain(inst, raw, false);
      return res;
    }
    double max_c = 0;
    for (int c : inst.capacity) max_c = std::max<double>(max_c, c);
    const double diameter =
        std::sqrt(2.0 * inst.node_count * max_c + 2.0 * inst.classes.size());
    gamma0 = diameter / g0;
  }

  // Window storage is bounded so very large instances degrade to a shorter
  // averaging window instead of exhausting memory.
  const std::size_t dim = std::max<std::size_t>(1, detail::state_dim(raw));
  const std::size_t max_window =
      std::max<std::size_t>(128, (1u << 28) / (8 * dim));

  std::deque<FractionalState> window;  // iterates lo..k
  std::deque<double> window_w;
  int window_lo = 1;
  FractionalState wsum = detail::zero_like(raw);
  double wtotal = 0.0;

  FractionalState best_state = raw;
  double best_value = -std::numeric_limits<double>::infinity();
  double checkpoint_value = -std::numeric_limits<double>::infinity();

  int k = 0;
  for (k = 1; k <= max_iters; ++k) {
    const double gamma_k = gamma0 / std::sqrt(static_cast<double>(k));

    window.push_back(raw);
    window_w.push_back(gamma_k);
    detail::axpy_state(wsum, raw, gamma_k);
    wtotal += gamma_k;
    const int lo = std::max(1, k / 2);
    while (window_lo < lo ||
           window.size() > max_window) {
      detail::axpy_state(wsum, window.front(), -window_w.front());
      wtotal -= window_w.front();
      window.pop_front();
      window_w.pop_front();
      ++window_lo;
    }

    SubgradientPair g = surrogate_subgradient(inst, raw, false);
    detail::ascend_in_place(inst, raw, g, gamma_k);

    if (k % 50 == 0 || k == max_iters) {
      // refresh the incremental sums to cancel accumulated roundoff
      if (k % 1000 == 0) {
        wsum = detail::zero_like(raw);
        wtotal = 0.0;
        for (std::size_t t = 0; t < window.size(); ++t) {
          detail::axpy_state(wsum, window[t], window_w[t]);
          wtotal += window_w[t];
        }
      }
      FractionalState avg = detail::scaled_state(wsum, 1.0 / wtotal);
      const double value = surrogate_gain(inst, avg, false);
      if (value > best_value) {
        best_value = value;
        best_state = std::move(avg);
      }
      if (checkpoint_value > -std::numeric_limits<double>::infinity() &&
          best_value - checkpoint_value < tol * std::max(1.0, std::fabs(best_value))) {
        res.iterations = k;
        res.state = best_state;
        res.value = best_value;
        return res;
      }
      checkpoint_value = best_value;
    }
  }
  res.iterations = max_iters;
  res.hit_max_iters = true;
  res.state = best_state;
  res.value = best_value;
  return res;
}

// Writes the exact linear program equivalent to the surrogate maximization,
// one auxiliary variable per (class, path, hop) term, in LP file format.
// Kept as a cross-validation hook for external solvers.
inline void write_lp(const ProblemInstance& inst, std::ostream& os) {
  auto tvar = [](std::size_t c, std::size_t p, std::size_t k) {
    return "t_" + std::to_string(c) + "_" + std::to_string(p) + "_" + std::to_string(k);
  };
  auto rvar = [](std::size_t c, std::size_t p) {
    return "rho_" + std::to_string(c) + "_" + std::to_string(p);
  };
  auto xvar = [](int v, int i) {
    return "xi_" + std::to_string(v) + "_" + std::to_string(i);
  };

  os << "Maximize\n obj:";
  bool first = true;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        const double coef = rc.rate * inst.edge_weight(p[k + 1], p[k]);
        os << (first ? " " : " + ") << detail::format_double(coef) << " " << tvar(ci, j, k);
        first = false;
      }
    }
  }
  if (first) os << " 0 t_dummy";
  os << "\nSubject To\n";
  int con = 0;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        os << " c" << ++con << ": " << tvar(ci, j, k) << " + " << rvar(ci, j);
        for (std::size_t kk = 0; kk <= k; ++kk)
          os << " - " << xvar(p[kk], rc.item);
        os << " <= 1\n";
      }
    }
    os << " c" << ++con << ":";
    for (std::size_t j = 0; j < rc.paths.size(); ++j)
      os << (j ? " + " : " ") << rvar(ci, j);
    os << " = 1\n";
  }
  for (int v = 0; v < inst.node_count; ++v) {
    os << " c" << ++con << ":";
    for (int i = 0; i < inst.item_count; ++i) os << (i ? " + " : " ") << xvar(v, i);
    os << " <= " << inst.capacity[v] << "\n";
  }
  os << "Bounds\n";
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      os << " 0 <= " << rvar(ci, j) << " <= 1\n";
      for (std::size_t k = 0; k + 1 < rc.paths[j].size(); ++k)
        os << " " << tvar(ci, j, k) << " <= 1\n";
    }
  }
  for (int v = 0; v < inst.node_count; ++v)
    for (int i = 0; i < inst.item_count; ++i)
      os << " 0 <= " << xvar(v, i) << " <= 1\n";
  os << "End\n";
}

namespace detail {

inline bool near_integral(double x, double tol = 1e-9) {
  return std::fabs(x) <= tol || std::fabs(x - 1.0) <= tol;
}

}  // namespace detail

// Pipage rounding of the cache marginals: repeatedly picks two fractional
// entries in the same node row and transfers mass to whichever feasible
// endpoint does not decrease the gain. The gain restricted to such a pair is
// affine, so an endpoint is always at least as good. Route probabilities are
// left untouched. Deterministic: rows scanned by node index, pairs are the
// two lowest-index fractional items.
inline FractionalState round_caching(const ProblemInstance& inst, FractionalState s) {
  const double snap = 1e-9;
  for (int v = 0; v < inst.node_count; ++v) {
    for (;;) {
      int a = -1, b = -1;
      for (int i = 0; i < inst.item_count && b < 0; ++i) {
        if (!detail::near_integral(s.cache_probs[v][i], snap)) {
          if (a < 0)
            a = i;
          else
            b = i;
        }
      }
      if (b < 0) break;  // zero or one fractional entry left; one is impossible
      const double xa = s.cache_probs[v][a];
      const double xb = s.cache_probs[v][b];
      // move delta from b to a: xa+delta, xb-delta
      const double up = std::min(1.0 - xa, xb);
      const double down = std::min(xa, 1.0 - xb);
      s.cache_probs[v][a] = xa + up;
      s.cache_probs[v][b] = xb - up;
      const double gain_up = caching_gain(inst, s, false);
      s.cache_probs[v][a] = xa - down;
      s.cache_probs[v][b] = xb + down;
      const double gain_down = caching_gain(inst, s, false);
      if (gain_up >= gain_down) {
        s.cache_probs[v][a] = xa + up;
        s.cache_probs[v][b] = xb - up;
      }
      // else keep the down transfer already in place
    }
    for (int i = 0; i < inst.item_count; ++i) {
      double& x = s.cache_probs[v][i];
      x = (x >= 0.5) ? 1.0 : 0.0;
    }
  }
  return s;
}

// Rounds the routing block: each class concentrates on the path minimizing
// the expected cost given the current cache marginals (ties broken toward
// the lowest path index). With integral caches the result is exactly a
// route-to-nearest-replica strategy.
inline FractionalState round_routing(const ProblemInstance& inst, FractionalState s) {
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    int best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      double miss = 1.0;
      double cost = 0.0;
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        miss *= 1.0 - s.cache_probs[p[k]][rc.item];
        cost += inst.edge_weight(p[k + 1], p[k]) * miss;
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = static_cast<int>(j);
      }
    }
    std::fill(s.route_probs[ci].begin(), s.route_probs[ci].end(), 0.0);
    s.route_probs[ci][best] = 1.0;
  }
  return s;
}

// Extracts the deterministic strategy from a fully rounded state.
inline IntegralStrategy extract_integral(const ProblemInstance& inst,
                                         const FractionalState& s) {
  IntegralStrategy out;
  out.route.resize(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    int arg = -1;
    for (std::size_t j = 0; j < s.route_probs[ci].size(); ++j)
      if (s.route_probs[ci][j] > 0.5) arg = static_cast<int>(j);
    if (arg < 0) throw std::invalid_argument("extract_integral: routing not integral");
    out.route[ci] = arg;
  }
  out.cached.assign(inst.node_count, std::vector<std::uint8_t>(inst.item_count, 0));
  for (int v = 0; v < inst.node_count; ++v)
    for (int i = 0; i < inst.item_count; ++i) {
      const double x = s.cache_probs[v][i];
      if (!detail::near_integral(x, 1e-6))
        throw std::invalid_argument("extract_integral: caching not integral");
      out.cached[v][i] = x >= 0.5 ? 1 : 0;
    }
  return out;
}

struct OfflineSolution {
  FractionalState fractional;  // relaxation output
  IntegralStrategy integral;
  double relaxation_value = 0.0;  // surrogate at the fractional state
  double gain = 0.0;              // caching gain of the integral strategy
  double certified_ratio = 0.0;   // gain / relaxation_value
  bool relaxation_warning = false;
};

// Relax, round caches, round routing -- in that order. The integral output
// has gain no smaller than the fractional gain, hence at least (1-1/e) of
// the optimum up to the relaxation tolerance.
inline OfflineSolution solve_offline(const ProblemInstance& inst, double tol = 1e-6,
                                     int max_iters = 20000) {
  OfflineSolution sol;
  RelaxationResult rel = solve_relaxation(inst, tol, max_iters);
  sol.fractional = rel.state;
  sol.relaxation_value = rel.value;
  sol.relaxation_warning = rel.hit_max_iters;
  FractionalState rounded = round_routing(inst, round_caching(inst, rel.state));
  sol.integral = extract_integral(inst, rounded);
  sol.gain = caching_gain(inst, sol.integral);
  sol.certified_ratio = sol.relaxation_value > 0.0 ? sol.gain / sol.relaxation_value : 1.0;
  return sol;
}

struct BruteForceResult {
  IntegralStrategy best;
  double min_cost = 0.0;
};

namespace detail {

// n choose k without overflow concerns at the sizes the budget guard allows.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int t = 1; t <= k; ++t) r = r * (n - t + 1) / t;
  return r;
}

// Routing-optimal cost for fixed caches: each class independently takes its
// cheapest path. route_out, when given, receives the argmin path indices.
inline double best_routing_cost(const ProblemInstance& inst,
                                const std::vector<std::vector<std::uint8_t>>& cached,
                                std::vector<int>* route_out) {
  double total = 0.0;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    double best_cost = std::numeric_limits<double>::infinity();
    int best = 0;
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      double cost = 0.0;
      bool missing = true;
      for (std::size_t k = 0; k + 1 < p.size() && missing; ++k) {
        if (cached[p[k]][rc.item]) {
          missing = false;
          break;
        }
        cost += inst.edge_weight(p[k + 1], p[k]);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = static_cast<int>(j);
      }
    }
    if (route_out) (*route_out)[ci] = best;
    total += rc.rate * best_cost;
  }
  return total;
}

inline double fixed_routing_cost(const ProblemInstance& inst,
                                 const std::vector<std::vector<std::uint8_t>>& cached,
                                 const std::vector<int>& route) {
  double total = 0.0;
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    const Path& p = rc.paths[route[ci]];
    double cost = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      if (cached[p[k]][rc.item]) break;
      cost += inst.edge_weight(p[k + 1], p[k]);
    }
    total += rc.rate * cost;
  }
  return total;
}

template <typename CostFn>
inline BruteForceResult enumerate_cachings(const ProblemInstance& inst,
                                           double max_combinations, CostFn cost_fn) {
  double combos = 1.0;
  for (int v = 0; v < inst.node_count; ++v) {
    combos *= binomial(inst.item_count, inst.capacity[v]);
    if (combos > max_combinations)
      throw std::runtime_error("brute force enumeration budget exceeded");
  }

  // one subset odometer per node, subsets in lexicographic order
  std::vector<std::vector<int>> subset(inst.node_count);
  for (int v = 0; v < inst.node_count; ++v) {
    subset[v].resize(inst.capacity[v]);
    for (int t = 0; t < inst.capacity[v]; ++t) subset[v][t] = t;
  }
  auto advance_subset = [&](int v) -> bool {
    auto& s = subset[v];
    const int k = static_cast<int>(s.size());
    const int n = inst.item_count;
    int t = k - 1;
    while (t >= 0 && s[t] == n - k + t) --t;
    if (t < 0) {
      for (int u = 0; u < k; ++u) s[u] = u;  // reset to first subset
      return false;                          // wrapped
    }
    ++s[t];
    for (int u = t + 1; u < k; ++u) s[u] = s[u - 1] + 1;
    return true;
  };

  std::vector<std::vector<std::uint8_t>> cached(
      inst.node_count, std::vector<std::uint8_t>(inst.item_count, 0));
  auto apply = [&](int v) {
    std::fill(cached[v].begin(), cached[v].end(), 0);
    for (int i : subset[v]) cached[v][i] = 1;
  };
  for (int v = 0; v < inst.node_count; ++v) apply(v);

  BruteForceResult res;
  res.min_cost = std::numeric_limits<double>::infinity();
  std::vector<int> route(inst.classes.size(), 0);
  for (;;) {
    const double cost = cost_fn(cached, &route);
    if (cost < res.min_cost) {
      res.min_cost = cost;
      res.best.cached = cached;
      res.best.route = route;
    }
    int v = 0;
    while (v < inst.node_count) {
      if (advance_subset(v)) {
        apply(v);
        break;
      }
      apply(v);
      ++v;
    }
    if (v == inst.node_count) break;
  }
  return res;
}

}  // namespace detail

// Exact minimizer of the expected cost over all deterministic strategies,
// by enumerating cache placements (routing is then separable per class).
// Refuses instances whose enumeration exceeds the budget.
inline BruteForceResult brute_force_optimum(const ProblemInstance& inst,
                                            double max_combinations = 1e7) {
  return detail::enumerate_cachings(
      inst, max_combinations,
      [&inst](const std::vector<std::vector<std::uint8_t>>& cached,
              std::vector<int>* route) {
        return detail::best_routing_cost(inst, cached, route);
      });
}

// Exact minimizer with the routing fixed; used to quantify how suboptimal a
// fixed routing (e.g. route-to-nearest-server) can get.
inline BruteForceResult brute_force_optimum_fixed_routing(
    const ProblemInstance& inst, const std::vector<int>& route,
    double max_combinations = 1e7) {
  BruteForceResult res = detail::enumerate_cachings(
      inst, max_combinations,
      [&inst, &route](const std::vector<std::vector<std::uint8_t>>& cached,
                      std::vector<int>* route_out) {
        (void)route_out;
        return detail::fixed_routing_cost(inst, cached, route);
      });
  res.best.route = route;
  return res;
}

// The four-node diamond: a source requesting two items stored at the far
// node, two alternative branches of costs M+1 and M+2 whose interior nodes
// hold a single cache slot each. Joint optimization of caching and routing
// beats any fixed routing on it by a factor growing linearly in M.
inline ProblemInstance make_diamond_instance(double M) {
  if (M < 1.0) throw std::invalid_argument("make_diamond_instance: M must be >= 1");
  ProblemInstance inst;
  inst.node_count = 4;  // 0=source, 1,2=branch caches, 3=server
  inst.item_count = 2;
  auto edge_pair = [&inst](int u, int v, double w) {
    inst.edges.push_back({u, v, w});
    inst.edges.push_back({v, u, w});
  };
  edge_pair(0, 1, 1.0);
  edge_pair(1, 3, M);
  edge_pair(0, 2, 2.0);
  edge_pair(2, 3, M);
  inst.capacity = {0, 1, 1, 0};
  inst.servers = {{3}, {3}};
  for (int item = 0; item < 2; ++item) {
    RequestClass rc;
    rc.item = item;
    rc.source = 0;
    rc.rate = 1.0;
    rc.paths = {{0, 1, 3}, {0, 2, 3}};
    inst.classes.push_back(rc);
  }
  inst.finalize();
  return inst;
}

struct EquivalenceReport {
  double integral_min = 0.0;   // exact deterministic optimum (oracle)
  double fractional_min = 0.0; // best randomized-strategy cost found
  double rounded_cost = 0.0;   // cost after rounding the fractional minimizer
  bool equal = false;
};

// Checks that randomized strategies buy nothing: the best fractional cost
// found (via the relaxation pipeline and the lifted oracle optimum) matches
// the deterministic optimum, and rounding the fractional minimizer recovers
// an integral strategy of equal cost.
inline EquivalenceReport check_randomization_equivalence(const ProblemInstance& inst,
                                                         double tol = 1e-6,
                                                         double max_combinations = 1e7) {
  EquivalenceReport rep;
  BruteForceResult opt = brute_force_optimum(inst, max_combinations);
  rep.integral_min = opt.min_cost;

  RelaxationResult rel = solve_relaxation(inst);
  const double frac_pipeline = expected_cost(inst, rel.state, false);
  const FractionalState lifted = lift(inst, opt.best);
  const double frac_lifted = expected_cost(inst, lifted, false);

  const FractionalState& argmin = frac_pipeline < frac_lifted ? rel.state : lifted;
  rep.fractional_min = std::min(frac_pipeline, frac_lifted);

  FractionalState rounded = round_routing(inst, round_caching(inst, argmin));
  rep.rounded_cost = expected_cost(inst, extract_integral(inst, rounded));

  rep.equal = std::fabs(rep.rounded_cost - rep.fractional_min) <= tol &&
              rep.fractional_min >= rep.integral_min - tol;
  return rep;
}

}  // namespace cachenet

#endif  // CACHENET_OFFLINE_HPP
