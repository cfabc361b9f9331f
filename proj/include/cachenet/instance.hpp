#ifndef CACHENET_INSTANCE_HPP
#define CACHENET_INSTANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cachenet {

// A path is a node sequence in request direction: starts at the source,
// ends at a designated server. Responses travel the reverse direction, so
// all cost formulas use the weight of the reversed edges.
using Path = std::vector<int>;

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

struct RequestClass {
  int item = 0;
  int source = 0;
  double rate = 0.0;
  std::vector<Path> paths;
};

// Cache network instance: directed symmetric graph, per-node cache slots,
// designated servers per item, Poisson demand classes with candidate path
// sets. Immutable after finalize(); safe to share read-only across threads.
class ProblemInstance {
 public:
  int node_count = 0;
  int item_count = 0;
  std::vector<Edge> edges;
  std::vector<int> capacity;               // per node, item slots
  std::vector<std::vector<int>> servers;   // per item, sorted node ids
  std::vector<RequestClass> classes;

  // Builds the O(1) lookup tables. Must be called after any mutation.
  void finalize() {
    weight_.assign(static_cast<std::size_t>(node_count) * node_count, -1.0);
    out_.assign(node_count, {});
    for (const Edge& e : edges) {
      if (e.from < 0 || e.from >= node_count || e.to < 0 || e.to >= node_count)
        throw std::out_of_range("edge endpoint out of range");
      weight_[static_cast<std::size_t>(e.from) * node_count + e.to] = e.weight;
      out_[e.from].push_back(e.to);
    }
    is_server_.assign(static_cast<std::size_t>(item_count) * node_count, 0);
    for (int i = 0; i < static_cast<int>(servers.size()); ++i) {
      for (int v : servers[i]) {
        if (v < 0 || v >= node_count) throw std::out_of_range("server node out of range");
        is_server_[static_cast<std::size_t>(i) * node_count + v] = 1;
      }
    }
  }

  bool has_edge(int u, int v) const { return edge_weight(u, v) >= 0.0; }

  // Weight of directed edge (u,v), or -1 if absent.
  double edge_weight(int u, int v) const {
    return weight_[static_cast<std::size_t>(u) * node_count + v];
  }

  bool item_served_by(int item, int node) const {
    return is_server_[static_cast<std::size_t>(item) * node_count + node] != 0;
  }

  const std::vector<int>& out_neighbors(int u) const { return out_[u]; }

  // Total number of candidate paths across all classes.
  int total_paths() const {
    int total = 0;
    for (const RequestClass& c : classes) total += static_cast<int>(c.paths.size());
    return total;
  }

  int max_paths_per_class() const {
    int m = 0;
    for (const RequestClass& c : classes) m = std::max(m, static_cast<int>(c.paths.size()));
    return m;
  }

  double total_rate() const {
    double s = 0.0;
    for (const RequestClass& c : classes) s += c.rate;
    return s;
  }

  double max_edge_weight() const {
    double m = 0.0;
    for (const Edge& e : edges) m = std::max(m, e.weight);
    return m;
  }

 private:
  std::vector<double> weight_;
  std::vector<std::vector<int>> out_;
  std::vector<std::uint8_t> is_server_;
};

// Position of a node within a path (0-based), or -1 if absent.
inline int position_in_path(const Path& p, int node) {
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] == node) return static_cast<int>(k);
  return -1;
}

// Cost of serving a request over the full path with all caches empty:
// the sum of reversed-edge weights, since only responses carry items.
inline double path_cost(const ProblemInstance& inst, const Path& p) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double w = inst.edge_weight(p[k + 1], p[k]);
    if (w < 0.0) throw std::invalid_argument("path uses a missing reverse edge");
    total += w;
  }
  return total;
}

// Report-style validation. Empty result means the instance is well formed:
// symmetric graph, valid path sets (start at source, simple, end at a
// designated server, no interior server), positive rates, sane capacities.
inline std::vector<std::string> validate_instance(const ProblemInstance& inst) {
  std::vector<std::string> violations;
  auto complain = [&violations](const std::string& msg) { violations.push_back(msg); };

  if (inst.node_count <= 0) complain("node count must be positive");
  if (inst.item_count < 0) complain("item count must be non-negative");

  for (const Edge& e : inst.edges) {
    if (e.weight < 0.0)
      complain("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
               ") has negative weight");
    if (!inst.has_edge(e.to, e.from))
      complain("graph not symmetric: reverse of (" + std::to_string(e.from) + "," +
               std::to_string(e.to) + ") missing");
  }

  if (static_cast<int>(inst.capacity.size()) != inst.node_count)
    complain("capacity vector size mismatch");
  for (int v = 0; v < static_cast<int>(inst.capacity.size()); ++v) {
    if (inst.capacity[v] < 0)
      complain("node " + std::to_string(v) + " has negative capacity");
    if (inst.capacity[v] > inst.item_count)
      complain("node " + std::to_string(v) + " capacity exceeds catalog size");
  }

  if (static_cast<int>(inst.servers.size()) != inst.item_count)
    complain("server map size mismatch");
  for (int i = 0; i < static_cast<int>(inst.servers.size()); ++i) {
    if (inst.servers[i].empty())
      complain("item " + std::to_string(i) + " has no designated server");
  }

  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    const std::string tag = "class " + std::to_string(ci);
    if (rc.item < 0 || rc.item >= inst.item_count) {
      complain(tag + ": item id out of range");
      continue;
    }
    if (rc.source < 0 || rc.source >= inst.node_count) {
      complain(tag + ": source id out of range");
      continue;
    }
    if (!(rc.rate > 0.0)) complain(tag + ": rate must be strictly positive");
    if (rc.paths.empty()) complain(tag + ": empty path set");
    for (std::size_t j = 0; j < rc.paths.size(); ++j) {
      const Path& p = rc.paths[j];
      const std::string ptag = tag + " path " + std::to_string(j);
      if (p.empty()) {
        complain(ptag + ": empty");
        continue;
      }
      if (p.front() != rc.source) complain(ptag + ": does not start at the source");
      bool in_range = true;
      for (int v : p)
        if (v < 0 || v >= inst.node_count) in_range = false;
      if (!in_range) {
        complain(ptag + ": node id out of range");
        continue;
      }
      std::vector<int> sorted(p);
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        complain(ptag + ": not simple");
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        if (!inst.has_edge(p[k], p[k + 1]) || !inst.has_edge(p[k + 1], p[k]))
          complain(ptag + ": hop " + std::to_string(k) + " is not an edge");
      }
      if (!inst.item_served_by(rc.item, p.back()))
        complain(ptag + ": does not end at a designated server");
      for (std::size_t k = 0; k + 1 < p.size(); ++k)
        if (inst.item_served_by(rc.item, p[k]))
          complain(ptag + ": interior node is a designated server");
    }
  }
  return violations;
}

// Deterministic joint strategy: one path index per class, exactly c_v cached
// items per node.
struct IntegralStrategy {
  std::vector<int> route;                         // per class, path index
  std::vector<std::vector<std::uint8_t>> cached;  // per node, per item flag
};

// Marginals of a randomized strategy: per-class distribution over paths and
// per-node cache inclusion probabilities summing to c_v.
struct FractionalState {
  std::vector<std::vector<double>> route_probs;  // per class, over its paths
  std::vector<std::vector<double>> cache_probs;  // per node, over items
};

struct RequestEvent {
  int class_index = 0;
  double time = 0.0;
  int path_choice = -1;
};

// Membership test for the deterministic feasible set. Malformed shapes or
// out-of-range indices are structural errors (thrown), distinct from a
// well-formed but infeasible strategy (returns false).
inline bool is_feasible(const ProblemInstance& inst, const IntegralStrategy& s) {
  if (static_cast<int>(s.route.size()) != static_cast<int>(inst.classes.size()))
    throw std::out_of_range("route vector size mismatch");
  if (static_cast<int>(s.cached.size()) != inst.node_count)
    throw std::out_of_range("cache matrix row count mismatch");
  for (std::size_t ci = 0; ci < s.route.size(); ++ci) {
    if (s.route[ci] < 0 || s.route[ci] >= static_cast<int>(inst.classes[ci].paths.size()))
      throw std::out_of_range("path index out of range for class " + std::to_string(ci));
  }
  for (int v = 0; v < inst.node_count; ++v) {
    if (static_cast<int>(s.cached[v].size()) != inst.item_count)
      throw std::out_of_range("cache matrix column count mismatch");
    int used = 0;
    for (std::uint8_t b : s.cached[v]) {
      if (b > 1) throw std::out_of_range("cache flag must be 0 or 1");
      used += b;
    }
    if (used != inst.capacity[v]) return false;
  }
  return true;
}

// Membership test for the relaxed feasible set (box, simplex, and per-node
// capped-simplex constraints), within tolerance.
inline bool is_feasible(const ProblemInstance& inst, const FractionalState& s,
                        double tol = 1e-9) {
  if (static_cast<int>(s.route_probs.size()) != static_cast<int>(inst.classes.size()))
    return false;
  if (static_cast<int>(s.cache_probs.size()) != inst.node_count) return false;
  for (std::size_t ci = 0; ci < s.route_probs.size(); ++ci) {
    const auto& r = s.route_probs[ci];
    if (r.size() != inst.classes[ci].paths.size()) return false;
    double sum = 0.0;
    for (double x : r) {
      if (x < -tol || x > 1.0 + tol) return false;
      sum += x;
    }
    if (std::fabs(sum - 1.0) > tol) return false;
  }
  for (int v = 0; v < inst.node_count; ++v) {
    const auto& xi = s.cache_probs[v];
    if (static_cast<int>(xi.size()) != inst.item_count) return false;
    double sum = 0.0;
    for (double x : xi) {
      if (x < -tol || x > 1.0 + tol) return false;
      sum += x;
    }
    if (std::fabs(sum - inst.capacity[v]) > tol) return false;
  }
  return true;
}

// Lifts a deterministic strategy to its (degenerate) marginals.
inline FractionalState lift(const ProblemInstance& inst, const IntegralStrategy& s) {
  FractionalState f;
  f.route_probs.resize(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    f.route_probs[ci].assign(inst.classes[ci].paths.size(), 0.0);
    f.route_probs[ci][s.route[ci]] = 1.0;
  }
  f.cache_probs.resize(inst.node_count);
  for (int v = 0; v < inst.node_count; ++v) {
    f.cache_probs[v].assign(inst.item_count, 0.0);
    for (int i = 0; i < inst.item_count; ++i)
      f.cache_probs[v][i] = s.cached[v][i] ? 1.0 : 0.0;
  }
  return f;
}

// Uniform initial state: equal path probabilities, cache marginals c_v/|C|.
inline FractionalState uniform_state(const ProblemInstance& inst) {
  FractionalState f;
  f.route_probs.resize(inst.classes.size());
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const std::size_t n = inst.classes[ci].paths.size();
    f.route_probs[ci].assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  }
  f.cache_probs.resize(inst.node_count);
  for (int v = 0; v < inst.node_count; ++v) {
    const double share =
        inst.item_count > 0 ? static_cast<double>(inst.capacity[v]) / inst.item_count : 0.0;
    f.cache_probs[v].assign(inst.item_count, share);
  }
  return f;
}

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace detail

// Line-oriented instance format:
//   nodes N items K
//   edge u v w
//   cap v c
//   server i v
//   demand i s lambda
//   path i s v1 v2 ... vk
// '#' starts a comment. Writing then reading reproduces the instance exactly.
inline void write_instance(const ProblemInstance& inst, std::ostream& os) {
  os << "nodes " << inst.node_count << " items " << inst.item_count << "\n";
  for (const Edge& e : inst.edges)
    os << "edge " << e.from << " " << e.to << " " << detail::format_double(e.weight) << "\n";
  for (int v = 0; v < inst.node_count; ++v)
    os << "cap " << v << " " << inst.capacity[v] << "\n";
  for (int i = 0; i < static_cast<int>(inst.servers.size()); ++i)
    for (int v : inst.servers[i]) os << "server " << i << " " << v << "\n";
  for (const RequestClass& rc : inst.classes) {
    os << "demand " << rc.item << " " << rc.source << " " << detail::format_double(rc.rate)
       << "\n";
    for (const Path& p : rc.paths) {
      os << "path " << rc.item << " " << rc.source;
      for (int v : p) os << " " << v;
      os << "\n";
    }
  }
}

inline ProblemInstance read_instance(std::istream& is) {
  ProblemInstance inst;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  auto fail = [&line_no](const std::string& msg) {
    throw std::runtime_error("instance parse error at line " + std::to_string(line_no) +
                             ": " + msg);
  };
  // class lookup by (item, source)
  auto find_class = [&inst](int item, int source) -> RequestClass* {
    for (RequestClass& rc : inst.classes)
      if (rc.item == item && rc.source == source) return &rc;
    return nullptr;
  };
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kw;
    if (!(ss >> kw)) continue;
    if (kw == "nodes") {
      std::string items_kw;
      if (!(ss >> inst.node_count >> items_kw >> inst.item_count) || items_kw != "items")
        fail("expected 'nodes N items K'");
      inst.capacity.assign(inst.node_count, 0);
      inst.servers.assign(inst.item_count, {});
      have_header = true;
    } else if (!have_header) {
      fail("header line must come first");
    } else if (kw == "edge") {
      Edge e;
      if (!(ss >> e.from >> e.to >> e.weight)) fail("expected 'edge u v w'");
      inst.edges.push_back(e);
    } else if (kw == "cap") {
      int v = 0, c = 0;
      if (!(ss >> v >> c)) fail("expected 'cap v c'");
      if (v < 0 || v >= inst.node_count) fail("cap: node out of range");
      inst.capacity[v] = c;
    } else if (kw == "server") {
      int i = 0, v = 0;
      if (!(ss >> i >> v)) fail("expected 'server i v'");
      if (i < 0 || i >= inst.item_count) fail("server: item out of range");
      inst.servers[i].push_back(v);
    } else if (kw == "demand") {
      RequestClass rc;
      if (!(ss >> rc.item >> rc.source >> rc.rate)) fail("expected 'demand i s lambda'");
      if (find_class(rc.item, rc.source)) fail("duplicate demand line");
      inst.classes.push_back(rc);
    } else if (kw == "path") {
      int item = 0, source = 0;
      if (!(ss >> item >> source)) fail("expected 'path i s v1 ...'");
      RequestClass* rc = find_class(item, source);
      if (!rc) fail("path line before its demand line");
      Path p;
      int v = 0;
      while (ss >> v) p.push_back(v);
      if (p.empty()) fail("path has no nodes");
      rc->paths.push_back(std::move(p));
    } else {
      fail("unknown keyword '" + kw + "'");
    }
  }
  if (!have_header) throw std::runtime_error("instance parse error: missing header");
  inst.finalize();
  return inst;
}

inline ProblemInstance read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  return read_instance(in);
}

inline void write_instance_file(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_instance(inst, out);
}

}  // namespace cachenet

#endif  // CACHENET_INSTANCE_HPP
