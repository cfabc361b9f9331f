#ifndef CACHENET_TESTS_HELPERS_HPP
#define CACHENET_TESTS_HELPERS_HPP

#include <algorithm>
#include <set>
#include <vector>

#include "cachenet/instance.hpp"
#include "cachenet/projection.hpp"
#include "cachenet/rng.hpp"

namespace testutil {

using namespace cachenet;

// Enumerates all simple paths from `s` ending at a designated server of
// `item` with no interior server, by depth-first search. Independent of the
// library's path machinery so it can serve as an oracle.
inline void all_valid_paths(const ProblemInstance& inst, int item, int s, Path& cur,
                            std::vector<Path>& out, std::size_t limit = 200) {
  const int v = cur.back();
  if (inst.item_served_by(item, v)) {
    out.push_back(cur);
    return;  // paths must stop at the first server encountered
  }
  if (out.size() >= limit) return;
  for (int u = 0; u < inst.node_count; ++u) {
    if (!inst.has_edge(v, u)) continue;
    if (std::find(cur.begin(), cur.end(), u) != cur.end()) continue;
    cur.push_back(u);
    all_valid_paths(inst, item, s, cur, out, limit);
    cur.pop_back();
  }
}

// Small random connected symmetric instance for property tests. Every class
// gets up to max_paths valid paths (shortest-by-hops first ordering is not
// required here; DFS order is deterministic).
inline ProblemInstance random_instance(Rng& rng, int nodes, int items, int classes,
                                       int max_paths, int cap = 1) {
  ProblemInstance inst;
  inst.node_count = nodes;
  inst.item_count = items;
  std::set<std::pair<int, int>> used;
  auto add_pair = [&](int u, int v, double w) {
    if (u == v || used.count({u, v})) return;
    used.insert({u, v});
    used.insert({v, u});
    inst.edges.push_back({u, v, w});
    inst.edges.push_back({v, u, w});
  };
  for (int v = 1; v < nodes; ++v) add_pair(v, rng.uniform_int(v), rng.uniform(1.0, 10.0));
  const int extra = rng.uniform_int(nodes);
  for (int t = 0; t < extra; ++t)
    add_pair(rng.uniform_int(nodes), rng.uniform_int(nodes), rng.uniform(1.0, 10.0));

  inst.capacity.assign(nodes, cap);
  inst.servers.resize(items);
  for (int i = 0; i < items; ++i) inst.servers[i] = {rng.uniform_int(nodes)};
  inst.finalize();

  std::set<std::pair<int, int>> class_keys;
  int guard = 0;
  while (static_cast<int>(inst.classes.size()) < classes && guard++ < 200) {
    const int item = rng.uniform_int(items);
    const int src = rng.uniform_int(nodes);
    if (class_keys.count({item, src})) continue;
    Path cur{src};
    std::vector<Path> paths;
    all_valid_paths(inst, item, src, cur, paths);
    if (paths.empty()) continue;
    std::sort(paths.begin(), paths.end(),
              [&inst](const Path& a, const Path& b) {
                const double ca = path_cost(inst, a), cb = path_cost(inst, b);
                return ca != cb ? ca < cb : a < b;
              });
    if (static_cast<int>(paths.size()) > max_paths) paths.resize(max_paths);
    class_keys.insert({item, src});
    RequestClass rc;
    rc.item = item;
    rc.source = src;
    rc.rate = rng.uniform(0.5, 2.0);
    rc.paths = paths;
    inst.classes.push_back(rc);
  }
  inst.finalize();
  return inst;
}

// Random point of the relaxed feasible set.
inline FractionalState random_state(const ProblemInstance& inst, Rng& rng) {
  FractionalState s;
  s.route_probs.resize(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    std::vector<double> r(inst.classes[ci].paths.size());
    double sum = 0.0;
    for (double& x : r) {
      x = -std::log(1.0 - rng.uniform());
      sum += x;
    }
    for (double& x : r) x /= sum;
    s.route_probs[ci] = r;
  }
  s.cache_probs.resize(inst.node_count);
  for (int v = 0; v < inst.node_count; ++v) {
    std::vector<double> xi(inst.item_count);
    for (double& x : xi) x = rng.uniform(-0.2, 1.2);
    s.cache_probs[v] = project_capped_simplex(xi, inst.capacity[v]);
  }
  return s;
}

// Random member of the deterministic feasible set.
inline IntegralStrategy random_integral(const ProblemInstance& inst, Rng& rng) {
  IntegralStrategy s;
  s.route.resize(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
    s.route[ci] = rng.uniform_int(static_cast<int>(inst.classes[ci].paths.size()));
  s.cached.assign(inst.node_count, std::vector<std::uint8_t>(inst.item_count, 0));
  for (int v = 0; v < inst.node_count; ++v) {
    std::vector<int> ids(inst.item_count);
    for (int i = 0; i < inst.item_count; ++i) ids[i] = i;
    for (int i = inst.item_count - 1; i > 0; --i)
      std::swap(ids[i], ids[rng.uniform_int(i + 1)]);
    for (int t = 0; t < inst.capacity[v]; ++t) s.cached[v][ids[t]] = 1;
  }
  return s;
}

}  // namespace testutil

#endif  // CACHENET_TESTS_HELPERS_HPP
