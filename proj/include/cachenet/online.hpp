#ifndef CACHENET_ONLINE_HPP
#define CACHENET_ONLINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachenet/instance.hpp"
#include "cachenet/objective.hpp"
#include "cachenet/projection.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

enum class ControlVariant { full_paths, single_path };
enum class RoutingMode { adaptive, fixed };

struct SlotConfig {
  double T = 50.0;      // slot duration
  double gamma0 = 0.0;  // base step size; <= 0 selects a scale-aware default
  std::uint64_t seed = 1;
  ControlVariant variant = ControlVariant::full_paths;
  int slots = 300;
  // Plumbing beyond the core protocol: freeze routing at the initial state
  // (cache-only adaptation) and optionally override that initial state.
  RoutingMode routing = RoutingMode::adaptive;
  std::optional<FractionalState> initial;
};

// Per-slot sniffed measurements. Only sums are needed by the estimators; the
// message counter tracks every hop a control or response message traverses.
struct MeasurementBank {
  std::vector<std::vector<double>> node_sums;  // per node, per item; entries >= 0
  std::vector<std::vector<double>> path_sums;  // per class, per path; entries <= 0
  long control_msgs = 0;

  explicit MeasurementBank(const ProblemInstance& inst) {
    node_sums.assign(inst.node_count, std::vector<double>(inst.item_count, 0.0));
    path_sums.resize(inst.classes.size());
    for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
      path_sums[ci].assign(inst.classes[ci].paths.size(), 0.0);
  }

  void clear() {
    for (auto& row : node_sums) std::fill(row.begin(), row.end(), 0.0);
    for (auto& row : path_sums) std::fill(row.begin(), row.end(), 0.0);
    control_msgs = 0;
  }
};

struct SweepResult {
  int stop_position = 0;            // 0-based path position where the response starts
  std::vector<double> node_values;  // sniffed upstream weight per path position
  double path_value = 0.0;          // negated total, recorded by the source
};

// One control message over one path at the current (raw) state. The counter
// starts at 1 - rho_p + xi at the source and grows by the local cache
// marginal at every node; the message turns around at the first node where
// it exceeds 1 (or at the designated server). The response accumulates edge
// weights on the way down and every node sniffs the running total.
inline SweepResult control_sweep(const ProblemInstance& inst, std::size_t class_index,
                                 std::size_t path_index, const FractionalState& state) {
  const RequestClass& rc = inst.classes[class_index];
  const Path& p = rc.paths[path_index];
  const double rho = state.route_probs[class_index][path_index];

  SweepResult res;
  double counter = 1.0 - rho;
  std::size_t stop = p.size() - 1;  // default: reaches the server
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    counter += state.cache_probs[p[k]][rc.item];
    if (counter > 1.0) {
      stop = k;
      break;
    }
  }
  res.stop_position = static_cast<int>(stop);
  res.node_values.assign(p.size(), 0.0);
  double weights = 0.0;
  for (std::size_t k = stop; k-- > 0;) {
    weights += inst.edge_weight(p[k + 1], p[k]);
    res.node_values[k] = weights;
  }
  res.path_value = p.size() > 1 ? -res.node_values[0] : 0.0;
  return res;
}

inline void record_sweep(const ProblemInstance& inst, std::size_t class_index,
                         std::size_t path_index, const SweepResult& sweep, double scale,
                         MeasurementBank& bank) {
  const RequestClass& rc = inst.classes[class_index];
  const Path& p = rc.paths[path_index];
  for (std::size_t k = 0; k <= static_cast<std::size_t>(sweep.stop_position); ++k)
    bank.node_sums[p[k]][rc.item] += scale * sweep.node_values[k];
  bank.path_sums[class_index][path_index] += scale * sweep.path_value;
  bank.control_msgs += 2L * sweep.stop_position;  // hops up + hops down
}

// Empirical averages scaled by the slot length. Their expectation equals the
// upper subgradient of the surrogate at the state the sweeps were run at.
inline SubgradientPair estimate_subgradients(const MeasurementBank& bank, double T) {
  SubgradientPair g;
  g.cache_grad = bank.node_sums;
  g.route_grad = bank.path_sums;
  for (auto& row : g.cache_grad)
    for (double& x : row) x /= T;
  for (auto& row : g.route_grad)
    for (double& x : row) x /= T;
  return g;
}

// Gradient step followed by the separable projections: each node's cache
// marginals onto its capped simplex, each class's path distribution onto the
// probability simplex.
inline FractionalState adapt_and_project(const ProblemInstance& inst, FractionalState s,
                                         const SubgradientPair& g, double step,
                                         bool adapt_routing = true) {
  if (adapt_routing) {
    for (std::size_t ci = 0; ci < s.route_probs.size(); ++ci) {
      auto& r = s.route_probs[ci];
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += step * g.route_grad[ci][j];
      r = project_simplex(r);
    }
  }
  for (int v = 0; v < inst.node_count; ++v) {
    auto& xi = s.cache_probs[v];
    for (int i = 0; i < inst.item_count; ++i) xi[i] += step * g.cache_grad[v][i];
    xi = project_capped_simplex(xi, inst.capacity[v]);
  }
  return s;
}

// Sliding average over the window [max(1, k/2), k] with weights 1/sqrt(l).
// states[t] is the iterate with index first_index + t.
inline FractionalState smooth(const std::vector<FractionalState>& states, int first_index,
                              int k) {
  if (states.empty()) throw std::invalid_argument("smooth: empty history");
  const int lo = std::max(first_index, std::max(1, k / 2));
  if (lo > k || k - first_index >= static_cast<int>(states.size()))
    throw std::invalid_argument("smooth: window outside recorded history");
  double total = 0.0;
  FractionalState acc = states.front();
  for (auto& r : acc.route_probs) std::fill(r.begin(), r.end(), 0.0);
  for (auto& xi : acc.cache_probs) std::fill(xi.begin(), xi.end(), 0.0);
  for (int l = lo; l <= k; ++l) {
    const FractionalState& s = states[l - first_index];
    const double w = 1.0 / std::sqrt(static_cast<double>(l));
    total += w;
    for (std::size_t ci = 0; ci < acc.route_probs.size(); ++ci)
      for (std::size_t j = 0; j < acc.route_probs[ci].size(); ++j)
        acc.route_probs[ci][j] += w * s.route_probs[ci][j];
    for (std::size_t v = 0; v < acc.cache_probs.size(); ++v)
      for (std::size_t i = 0; i < acc.cache_probs[v].size(); ++i)
        acc.cache_probs[v][i] += w * s.cache_probs[v][i];
  }
  for (auto& r : acc.route_probs)
    for (double& x : r) x /= total;
  for (auto& xi : acc.cache_probs)
    for (double& x : xi) x /= total;
  return acc;
}

// Draws a set of exactly `cap` items whose inclusion probabilities match the
// marginals: the item lengths tessellate a cap-by-1 box and a single uniform
// cut selects one item per row.
inline std::vector<int> sample_cache_set(const std::vector<double>& marginals, int cap,
                                         Rng& rng) {
  const int n = static_cast<int>(marginals.size());
  if (cap < 0 || cap > n)
    throw std::invalid_argument("sample_cache_set: capacity out of range");
  if (cap == 0) return {};
  double sum = 0.0;
  for (double m : marginals) {
    if (m < -1e-9 || m > 1.0 + 1e-9)
      throw std::invalid_argument("sample_cache_set: marginal outside [0,1]");
    sum += m;
  }
  if (std::fabs(sum - cap) > 1e-6)
    throw std::invalid_argument("sample_cache_set: marginals do not sum to capacity");

  std::vector<double> upper(n);
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += std::max(0.0, marginals[i]);
    upper[i] = cum;
  }
  const double z = rng.uniform();
  std::vector<int> chosen;
  chosen.reserve(cap);
  int hint = 0;
  for (int row = 0; row < cap; ++row) {
    const double target = std::min(row + z, cum * (1.0 - 1e-16));
    int i = hint;
    while (i < n - 1 && upper[i] <= target) ++i;
    if (!chosen.empty() && i == chosen.back() && i < n - 1) ++i;  // roundoff guard
    chosen.push_back(i);
    hint = i;
  }
  return chosen;
}

// Categorical path draw; zero-probability paths are never selected.
inline int sample_path(const std::vector<double>& probs, Rng& rng) {
  return rng.categorical(probs);
}

struct TraceRow {
  int slot = 0;
  double time = 0.0;
  double gain_smoothed = 0.0;  // exact expected gain at the smoothed state
  double cost_smoothed = 0.0;  // exact expected cost at the smoothed state
  double cost_sampled = 0.0;   // expected cost at (smoothed routing, sampled caches)
  long control_msgs = 0;
};

struct SimTrace {
  std::vector<TraceRow> rows;
  FractionalState final_raw;
  FractionalState final_smoothed;

  void write_csv(std::ostream& os) const {
    os << "slot,time,F_smoothed,cost_smoothed,cost_sampled,ctrl_msgs\n";
    for (const TraceRow& r : rows) {
      os << r.slot << "," << detail::format_double(r.time) << ","
         << detail::format_double(r.gain_smoothed) << ","
         << detail::format_double(r.cost_smoothed) << ","
         << detail::format_double(r.cost_sampled) << "," << r.control_msgs << "\n";
    }
  }
};

namespace detail {

inline double subgradient_norm(const SubgradientPair& g) {
  double s = 0.0;
  for (const auto& r : g.route_grad)
    for (double x : r) s += x * x;
  for (const auto& z : g.cache_grad)
    for (double x : z) s += x * x;
  return std::sqrt(s);
}

// Arrival times of one class within one slot, sorted.
inline std::vector<double> slot_arrivals(double rate, double T, Rng& rng) {
  const int n = rng.poisson(rate * T);
  std::vector<double> times(n);
  for (int t = 0; t < n; ++t) times[t] = rng.uniform() * T;
  std::sort(times.begin(), times.end());
  return times;
}

inline double default_gamma0(const ProblemInstance& inst, const FractionalState& s) {
  const double g0 = subgradient_norm(surrogate_subgradient(inst, s, false));
  double max_c = 0;
  for (int c : inst.capacity) max_c = std::max<double>(max_c, c);
  const double diameter =
      std::sqrt(2.0 * inst.node_count * max_c + 2.0 * inst.classes.size());
  return g0 > 0.0 ? diameter / g0 : 1.0;
}

}  // namespace detail

// Runs the control plane of one slot at a frozen state: Poisson arrivals per
// class, one sweep per candidate path (or a single sweep over a random
// support path, scaled by the support size), then the slot-mean estimates.
inline SubgradientPair run_control_slot(const ProblemInstance& inst,
                                        const FractionalState& raw, double T,
                                        ControlVariant variant, Rng& rng,
                                        long* msg_count = nullptr) {
  MeasurementBank bank(inst);
  for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
    const RequestClass& rc = inst.classes[ci];
    const int arrivals = rng.poisson(rc.rate * T);
    for (int a = 0; a < arrivals; ++a) {
      if (variant == ControlVariant::full_paths) {
        for (std::size_t j = 0; j < rc.paths.size(); ++j)
          record_sweep(inst, ci, j, control_sweep(inst, ci, j, raw), 1.0, bank);
      } else {
        std::vector<int> support;
        for (std::size_t j = 0; j < rc.paths.size(); ++j)
          if (raw.route_probs[ci][j] > 0.0) support.push_back(static_cast<int>(j));
        if (support.empty()) continue;
        const int j = support[rng.uniform_int(static_cast<int>(support.size()))];
        const double scale = static_cast<double>(support.size());
        record_sweep(inst, ci, j, control_sweep(inst, ci, j, raw), scale, bank);
      }
    }
  }
  if (msg_count) *msg_count = bank.control_msgs;
  return estimate_subgradients(bank, T);
}

// Expected cost at the smoothed routing marginals combined with a concrete
// cache placement; this is what a cost snapshot taken inside the slot sees.
inline double snapshot_cost(const ProblemInstance& inst, const FractionalState& smoothed,
                            const std::vector<std::vector<std::uint8_t>>& cached) {
  FractionalState s = smoothed;
  for (int v = 0; v < inst.node_count; ++v)
    for (int i = 0; i < inst.item_count; ++i)
      s.cache_probs[v][i] = cached[v][i] ? 1.0 : 0.0;
  return expected_cost(inst, s, false);
}

// Distributed projected gradient ascent, simulated slot by slot. Per slot:
// smooth the iterate history, reshuffle caches from the smoothed marginals,
// route Poisson arrivals from the smoothed path distributions, run control
// sweeps at the raw iterate, then adapt and project. Fully determined by
// (instance, config).
inline SimTrace simulate(const ProblemInstance& inst, const SlotConfig& cfg) {
  if (cfg.T <= 0.0) throw std::invalid_argument("simulate: slot duration must be positive");
  if (cfg.slots < 1) throw std::invalid_argument("simulate: need at least one slot");

  FractionalState raw = cfg.initial ? *cfg.initial : uniform_state(inst);
  if (!is_feasible(inst, raw))
    throw std::invalid_argument("simulate: infeasible initial state");

  const double gamma0 = cfg.gamma0 > 0.0 ? cfg.gamma0 : detail::default_gamma0(inst, raw);
  const double c0 = empty_cache_cost(inst);

  SimTrace trace;
  trace.rows.reserve(cfg.slots);

  std::deque<FractionalState> history;  // raw iterates window_first..k
  int window_first = 1;

  for (int k = 1; k <= cfg.slots; ++k) {
    history.push_back(raw);
    const int lo = std::max(1, k / 2);
    while (window_first < lo) {
      history.pop_front();
      ++window_first;
    }
    const std::vector<FractionalState> window(history.begin(), history.end());
    const FractionalState smoothed = smooth(window, window_first, k);

    // cache reshuffle at the slot boundary
    std::vector<std::vector<std::uint8_t>> cached(
        inst.node_count, std::vector<std::uint8_t>(inst.item_count, 0));
    for (int v = 0; v < inst.node_count; ++v) {
      Rng node_rng = Rng::stream(cfg.seed, 0xCA5E, static_cast<std::uint64_t>(v),
                                 static_cast<std::uint64_t>(k));
      for (int i : sample_cache_set(smoothed.cache_probs[v], inst.capacity[v], node_rng))
        cached[v][i] = 1;
    }

    MeasurementBank bank(inst);
    for (std::size_t ci = 0; ci < inst.classes.size(); ++ci) {
      const RequestClass& rc = inst.classes[ci];
      Rng class_rng = Rng::stream(cfg.seed, 0xA221, ci, static_cast<std::uint64_t>(k));
      const auto arrivals = detail::slot_arrivals(rc.rate, cfg.T, class_rng);
      for (std::size_t a = 0; a < arrivals.size(); ++a) {
        (void)sample_path(smoothed.route_probs[ci], class_rng);
        if (cfg.variant == ControlVariant::full_paths) {
          for (std::size_t j = 0; j < rc.paths.size(); ++j)
            record_sweep(inst, ci, j, control_sweep(inst, ci, j, raw), 1.0, bank);
        } else {
          std::vector<int> support;
          for (std::size_t j = 0; j < rc.paths.size(); ++j)
            if (raw.route_probs[ci][j] > 0.0) support.push_back(static_cast<int>(j));
          if (support.empty()) continue;
          const int j = support[class_rng.uniform_int(static_cast<int>(support.size()))];
          record_sweep(inst, ci, j, control_sweep(inst, ci, j, raw),
                       static_cast<double>(support.size()), bank);
        }
      }
    }

    TraceRow row;
    row.slot = k;
    row.time = k * cfg.T;
    row.cost_smoothed = expected_cost(inst, smoothed, false);
    row.gain_smoothed = c0 - row.cost_smoothed;
    row.cost_sampled = snapshot_cost(inst, smoothed, cached);
    row.control_msgs = bank.control_msgs;
    trace.rows.push_back(row);

    const SubgradientPair est = estimate_subgradients(bank, cfg.T);
    const double gamma_k = gamma0 / std::sqrt(static_cast<double>(k));
    raw = adapt_and_project(inst, std::move(raw), est, gamma_k,
                            cfg.routing == RoutingMode::adaptive);

    if (k == cfg.slots) {
      trace.final_raw = raw;
      trace.final_smoothed = smoothed;
    }
  }
  return trace;
}

// Upper bound on the expected optimality gap of the smoothed iterate after k
// slots, from the subgradient second-moment constants. Step size 1/sqrt(l).
inline double convergence_bound(const ProblemInstance& inst, long k, double T) {
  if (k < 1) throw std::invalid_argument("convergence_bound: k must be >= 1");
  const double W = inst.max_edge_weight();
  const double Lambda = inst.total_rate();
  const double P = inst.total_paths();
  const double Pbar = inst.max_paths_per_class();
  const double V = inst.node_count;
  const double R = static_cast<double>(inst.classes.size());
  const double C = inst.item_count;
  double max_c = 0;
  for (int c : inst.capacity) max_c = std::max<double>(max_c, c);

  const double moment = Lambda * Lambda + Lambda / T;
  const double C1 = W * W * Pbar * Pbar * V * V * C * moment;
  const double C2 = W * W * V * V * P * moment;
  const double D = std::sqrt(2.0 * V * max_c + 2.0 * R);
  const double M2 = V * C1 + R * C2;

  double sum_gamma = 0.0, sum_gamma_sq = 0.0;
  for (long l = std::max<long>(1, k / 2); l <= k; ++l) {
    const double g = 1.0 / std::sqrt(static_cast<double>(l));
    sum_gamma += g;
    sum_gamma_sq += g * g;
  }
  return (D * D + M2 * sum_gamma_sq) / (2.0 * sum_gamma);
}

}  // namespace cachenet

#endif  // CACHENET_ONLINE_HPP
