#ifndef CACHENET_TOPOGEN_HPP
#define CACHENET_TOPOGEN_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachenet/instance.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

// Undirected simple graph under construction; expanded to a symmetric
// directed edge list when the instance is assembled.
struct TopologyGraph {
  int nodes = 0;
  std::set<std::pair<int, int>> links;  // u < v

  void add_link(int u, int v) {
    if (u == v) return;
    if (u > v) std::swap(u, v);
    links.insert({u, v});
  }

  bool connected() const {
    if (nodes == 0) return false;
    std::vector<std::vector<int>> adj(nodes);
    for (auto [u, v] : links) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    std::vector<char> seen(nodes, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : adj[v])
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
    }
    return count == nodes;
  }

  int directed_edge_count() const { return 2 * static_cast<int>(links.size()); }
};

namespace topo {

inline TopologyGraph cycle(int n) {
  TopologyGraph g;
  g.nodes = n;
  for (int v = 0; v < n; ++v) g.add_link(v, (v + 1) % n);
  return g;
}

inline TopologyGraph grid_2d(int rows, int cols) {
  TopologyGraph g;
  g.nodes = rows * cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) g.add_link(v, v + 1);
      if (r + 1 < rows) g.add_link(v, v + cols);
    }
  return g;
}

inline TopologyGraph hypercube(int dim) {
  TopologyGraph g;
  g.nodes = 1 << dim;
  for (int v = 0; v < g.nodes; ++v)
    for (int b = 0; b < dim; ++b) g.add_link(v, v ^ (1 << b));
  return g;
}

// Margulis-Gabber-Galil expander on m*m vertices: (x,y) connects to
// (x+-2y, y), (x+-(2y+1), y), (x, y+-2x), (x, y+-(2x+1)), all mod m.
inline TopologyGraph expander(int m) {
  TopologyGraph g;
  g.nodes = m * m;
  auto id = [m](int x, int y) { return ((x % m + m) % m) * m + ((y % m + m) % m); };
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      const int v = id(x, y);
      g.add_link(v, id(x + 2 * y, y));
      g.add_link(v, id(x - 2 * y, y));
      g.add_link(v, id(x + 2 * y + 1, y));
      g.add_link(v, id(x - 2 * y - 1, y));
      g.add_link(v, id(x, y + 2 * x));
      g.add_link(v, id(x, y - 2 * x));
      g.add_link(v, id(x, y + 2 * x + 1));
      g.add_link(v, id(x, y - 2 * x - 1));
    }
  return g;
}

inline TopologyGraph erdos_renyi(int n, double p, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    TopologyGraph g;
    g.nodes = n;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.uniform() < p) g.add_link(u, v);
    if (g.connected()) return g;
  }
  throw std::runtime_error("erdos_renyi: failed to sample a connected graph");
}

// Random d-regular graph via the pairing model, resampled until simple and
// connected.
inline TopologyGraph random_regular(int n, int d, Rng& rng) {
  if ((n * d) % 2 != 0) throw std::invalid_argument("random_regular: n*d must be even");
  for (int attempt = 0; attempt < 500; ++attempt) {
    std::vector<int> stubs;
    stubs.reserve(n * d);
    for (int v = 0; v < n; ++v)
      for (int t = 0; t < d; ++t) stubs.push_back(v);
    for (int i = static_cast<int>(stubs.size()) - 1; i > 0; --i)
      std::swap(stubs[i], stubs[rng.uniform_int(i + 1)]);
    TopologyGraph g;
    g.nodes = n;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      const int u = stubs[i], v = stubs[i + 1];
      if (u == v || g.links.count({std::min(u, v), std::max(u, v)})) {
        ok = false;
        break;
      }
      g.add_link(u, v);
    }
    if (ok && g.connected()) return g;
  }
  throw std::runtime_error("random_regular: failed to sample a simple connected graph");
}

// Watts-Strogatz small world: ring lattice with k neighbors, each clockwise
// link rewired with probability p.
inline TopologyGraph watts_strogatz(int n, int k, double p, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    TopologyGraph g;
    g.nodes = n;
    for (int v = 0; v < n; ++v)
      for (int t = 1; t <= k / 2; ++t) {
        int target = (v + t) % n;
        if (rng.uniform() < p) {
          int w = rng.uniform_int(n);
          int guard = 0;
          while ((w == v || g.links.count({std::min(v, w), std::max(v, w)})) &&
                 guard++ < 50)
            w = rng.uniform_int(n);
          if (guard < 50) target = w;
        }
        g.add_link(v, target);
      }
    if (g.connected()) return g;
  }
  throw std::runtime_error("watts_strogatz: failed to sample a connected graph");
}

// Kleinberg small world: grid plus one long-range contact per node, sampled
// with probability proportional to distance^-2.
inline TopologyGraph kleinberg(int side, Rng& rng) {
  TopologyGraph g = grid_2d(side, side);
  auto manhattan = [side](int a, int b) {
    return std::abs(a / side - b / side) + std::abs(a % side - b % side);
  };
  for (int v = 0; v < g.nodes; ++v) {
    std::vector<double> weights(g.nodes, 0.0);
    for (int u = 0; u < g.nodes; ++u) {
      if (u == v) continue;
      const double d = manhattan(u, v);
      weights[u] = 1.0 / (d * d);
    }
    g.add_link(v, rng.categorical(weights));
  }
  return g;
}

// Barabasi-Albert preferential attachment with m links per new node.
inline TopologyGraph barabasi_albert(int n, int m, Rng& rng) {
  if (n <= m) throw std::invalid_argument("barabasi_albert: need n > m");
  TopologyGraph g;
  g.nodes = n;
  std::vector<int> targets;  // node repeated once per degree
  for (int v = 0; v < m + 1; ++v)
    for (int u = v + 1; u < m + 1; ++u) {
      g.add_link(v, u);
      targets.push_back(v);
      targets.push_back(u);
    }
  for (int v = m + 1; v < n; ++v) {
    std::set<int> chosen;
    int guard = 0;
    while (static_cast<int>(chosen.size()) < m && guard++ < 1000)
      chosen.insert(targets[rng.uniform_int(static_cast<int>(targets.size()))]);
    for (int u : chosen) {
      g.add_link(v, u);
      targets.push_back(v);
      targets.push_back(u);
    }
  }
  return g;
}

}  // namespace topo

// Synthetic topology by name. Sizes default to the evaluation setup; a
// size <= 0 keeps the default.
inline TopologyGraph generate_topology(const std::string& kind, std::uint64_t seed,
                                       int size = 0) {
  Rng rng = Rng::stream(seed, 0x706F);
  if (kind == "cycle") return topo::cycle(size > 0 ? size : 30);
  if (kind == "grid-2d") {
    const int side = size > 0 ? size : 10;
    return topo::grid_2d(side, side);
  }
  if (kind == "hypercube") return topo::hypercube(size > 0 ? size : 7);
  if (kind == "expander") return topo::expander(size > 0 ? size : 10);
  if (kind == "erdos-renyi") return topo::erdos_renyi(size > 0 ? size : 100, 0.1, rng);
  if (kind == "regular") return topo::random_regular(size > 0 ? size : 100, 3, rng);
  if (kind == "watts-strogatz")
    return topo::watts_strogatz(size > 0 ? size : 100, 4, 0.3, rng);
  if (kind == "small-world") return topo::kleinberg(size > 0 ? size : 10, rng);
  if (kind == "barabasi-albert")
    return topo::barabasi_albert(size > 0 ? size : 100, 8, rng);
  throw std::invalid_argument("unknown topology kind: " + kind);
}

// Edge-list file: optional '# ...' comments, a 'nodes N' header, then one
// 'u v [w]' line per undirected link.
inline TopologyGraph load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path);
  TopologyGraph g;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first == "nodes") {
      if (!(ss >> g.nodes) || g.nodes <= 0)
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": bad node count");
      have_header = true;
      continue;
    }
    if (!have_header)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": missing 'nodes N' header");
    int u = 0, v = 0;
    try {
      u = std::stoi(first);
    } catch (...) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad edge line");
    }
    if (!(ss >> v))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad edge line");
    if (u < 0 || u >= g.nodes || v < 0 || v >= g.nodes)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": endpoint out of range");
    g.add_link(u, v);
  }
  if (!have_header) throw std::runtime_error(path + ": missing 'nodes N' header");
  return g;
}

struct DemandParams {
  int catalog = 10;       // |C|
  int requests = 100;     // |R|
  int sources = 10;       // |Q|
  int capacity = 2;       // c_v, uniform across nodes
  double zipf_s = 1.2;
  int paths_per_class = 2;  // k
  double max_stretch = 4.0;
};

namespace detail {

// Dijkstra in the response-weight metric: the cost of an s->t request path
// is the weight sum of the reversed edges.
inline void response_dijkstra(const ProblemInstance& inst, int source,
                              std::vector<double>& dist, std::vector<int>& parent,
                              const std::vector<char>* node_banned = nullptr,
                              const std::set<std::pair<int, int>>* edge_banned = nullptr) {
  const double inf = std::numeric_limits<double>::infinity();
  dist.assign(inst.node_count, inf);
  parent.assign(inst.node_count, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (int u : inst.out_neighbors(v)) {
      if (node_banned && (*node_banned)[u]) continue;
      if (edge_banned && edge_banned->count({v, u})) continue;
      const double w = inst.edge_weight(u, v);  // reverse edge carries the item
      if (w < 0.0) continue;
      if (dist[v] + w < dist[u]) {
        dist[u] = dist[v] + w;
        parent[u] = v;
        pq.push({dist[u], u});
      }
    }
  }
}

inline Path extract_path(const std::vector<int>& parent, int source, int target) {
  Path p;
  for (int v = target; v != -1; v = parent[v]) p.push_back(v);
  std::reverse(p.begin(), p.end());
  if (p.empty() || p.front() != source) return {};
  return p;
}

inline double response_path_cost(const ProblemInstance& inst, const Path& p) {
  double c = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) c += inst.edge_weight(p[k + 1], p[k]);
  return c;
}

// Yen's k shortest loopless paths from source to target in the response
// metric, with nodes in `banned` excluded everywhere (used to keep interior
// designated servers off the paths).
inline std::vector<Path> yen_k_shortest(const ProblemInstance& inst, int source,
                                        int target, int k,
                                        const std::vector<char>& banned) {
  std::vector<Path> result;
  std::vector<double> dist;
  std::vector<int> parent;
  response_dijkstra(inst, source, dist, parent, &banned);
  Path first = extract_path(parent, source, target);
  if (first.empty() || !std::isfinite(dist[target])) return result;
  result.push_back(first);

  std::vector<std::pair<double, Path>> candidates;
  while (static_cast<int>(result.size()) < k) {
    const Path& prev = result.back();
    for (std::size_t spur = 0; spur + 1 < prev.size(); ++spur) {
      const Path root(prev.begin(), prev.begin() + spur + 1);
      std::set<std::pair<int, int>> edge_banned;
      for (const Path& p : result) {
        if (p.size() > spur &&
            std::equal(root.begin(), root.end(), p.begin()))
          edge_banned.insert({p[spur], p[spur + 1]});
      }
      std::vector<char> node_banned = banned;
      for (std::size_t t = 0; t < spur; ++t) node_banned[root[t]] = 1;
      std::vector<double> sd;
      std::vector<int> sp;
      response_dijkstra(inst, root.back(), sd, sp, &node_banned, &edge_banned);
      if (!std::isfinite(sd[target])) continue;
      Path tail = extract_path(sp, root.back(), target);
      if (tail.empty()) continue;
      Path full = root;
      full.insert(full.end(), tail.begin() + 1, tail.end());
      // reject duplicates
      bool dup = false;
      for (const Path& p : result)
        if (p == full) dup = true;
      for (const auto& c : candidates)
        if (c.second == full) dup = true;
      if (!dup) candidates.push_back({response_path_cost(inst, full), full});
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(),
                                 [](const auto& a, const auto& b) {
                                   return a.first != b.first ? a.first < b.first
                                                             : a.second < b.second;
                                 });
    result.push_back(best->second);
    candidates.erase(best);
  }
  return result;
}

}  // namespace detail

// Builds per-class path sets: up to k loop-free paths to a designated
// server, shortest first, everything within max_stretch of the shortest,
// never passing through a designated server en route. Throws when a class
// has no valid path.
inline void generate_path_sets(ProblemInstance& inst, int k, double max_stretch) {
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    RequestClass& rc = inst.classes[ci];
    std::vector<char> banned(inst.node_count, 0);
    for (int s : inst.servers[rc.item]) banned[s] = 1;
    std::vector<std::pair<double, Path>> merged;
    for (int server : inst.servers[rc.item]) {
      std::vector<char> allow_target = banned;
      allow_target[server] = 0;
      if (banned[rc.source]) continue;  // source itself is a server: no route needed
      auto paths = detail::yen_k_shortest(inst, rc.source, server, k, allow_target);
      for (Path& p : paths) merged.push_back({detail::response_path_cost(inst, p), p});
    }
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](const auto& a, const auto& b) { return a.second == b.second; }),
                 merged.end());
    rc.paths.clear();
    if (merged.empty())
      throw std::runtime_error("no valid path for class " + std::to_string(ci));
    const double shortest = merged.front().first;
    for (const auto& [cost, p] : merged) {
      if (static_cast<int>(rc.paths.size()) >= k) break;
      if (cost > max_stretch * shortest + 1e-12) break;
      rc.paths.push_back(p);
    }
  }
}

// Demand, servers, capacities and weights in the evaluation style: one
// designated server per item chosen uniformly, |Q| random sources, |R|
// classes sampled without replacement from catalog x sources, rates Zipf
// over the sampled order normalized so the per-source average rate is 1.
inline ProblemInstance generate_instance(const TopologyGraph& g, const DemandParams& dp,
                                         std::uint64_t seed, bool randomize_weights = true) {
  if (dp.requests > dp.catalog * dp.sources)
    throw std::invalid_argument("generate_instance: requests exceed catalog x sources");
  if (dp.sources > g.nodes)
    throw std::invalid_argument("generate_instance: more sources than nodes");

  ProblemInstance inst;
  inst.node_count = g.nodes;
  inst.item_count = dp.catalog;

  Rng wrng = Rng::stream(seed, 0x574);
  for (auto [u, v] : g.links) {
    const double w = randomize_weights ? wrng.uniform(1.0, 100.0) : 1.0;
    inst.edges.push_back({u, v, w});
    inst.edges.push_back({v, u, w});
  }

  inst.capacity.assign(g.nodes, dp.capacity);

  Rng srng = Rng::stream(seed, 0x5E4);
  inst.servers.resize(dp.catalog);
  for (int i = 0; i < dp.catalog; ++i) inst.servers[i] = {srng.uniform_int(g.nodes)};

  // distinct source nodes
  std::vector<int> all_nodes(g.nodes);
  for (int v = 0; v < g.nodes; ++v) all_nodes[v] = v;
  for (int i = g.nodes - 1; i > 0; --i)
    std::swap(all_nodes[i], all_nodes[srng.uniform_int(i + 1)]);
  const std::vector<int> sources(all_nodes.begin(), all_nodes.begin() + dp.sources);

  // classes without replacement from catalog x sources
  std::vector<std::pair<int, int>> pool;
  pool.reserve(static_cast<std::size_t>(dp.catalog) * dp.sources);
  for (int i = 0; i < dp.catalog; ++i)
    for (int s : sources) pool.push_back({i, s});
  for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i)
    std::swap(pool[i], pool[srng.uniform_int(i + 1)]);

  double rate_sum = 0.0;
  for (int r = 0; r < dp.requests; ++r) {
    RequestClass rc;
    rc.item = pool[r].first;
    rc.source = pool[r].second;
    rc.rate = std::pow(static_cast<double>(r + 1), -dp.zipf_s);  // rank = sample order
    rate_sum += rc.rate;
    inst.classes.push_back(rc);
  }
  const double scale = dp.sources / rate_sum;  // sum of rates = |Q|
  for (RequestClass& rc : inst.classes) rc.rate *= scale;

  inst.finalize();
  generate_path_sets(inst, dp.paths_per_class, dp.max_stretch);
  inst.finalize();
  return inst;
}

}  // namespace cachenet

#endif  // CACHENET_TOPOGEN_HPP
