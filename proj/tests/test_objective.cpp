#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cachenet/objective.hpp"
#include "cachenet/offline.hpp"
#include "cachenet/online.hpp"
#include "helpers.hpp"

using namespace cachenet;

namespace {

// 3-node line: source 0, relay 1, server 2; one item unless stated.
ProblemInstance line_instance(double w01 = 1.0, double w12 = 5.0, int items = 1,
                              int cap1 = 1) {
  ProblemInstance inst;
  inst.node_count = 3;
  inst.item_count = items;
  auto pair = [&inst](int u, int v, double w) {
    inst.edges.push_back({u, v, w});
    inst.edges.push_back({v, u, w});
  };
  pair(0, 1, w01);
  pair(1, 2, w12);
  inst.capacity = {0, cap1, 0};
  inst.servers.assign(items, {2});
  for (int i = 0; i < items; ++i) {
    RequestClass rc;
    rc.item = i;
    rc.source = 0;
    rc.rate = 1.0;
    rc.paths = {{0, 1, 2}};
    inst.classes.push_back(rc);
  }
  inst.finalize();
  return inst;
}

}  // namespace

TEST_CASE("diamond hand-evaluated costs") {
  ProblemInstance inst = make_diamond_instance(10.0);

  SECTION("empty caches cost the selected path weights") {
    ProblemInstance empty = inst;
    empty.capacity = {0, 0, 0, 0};
    empty.finalize();
    IntegralStrategy s;
    s.route = {0, 0};  // both on the M+1 branch
    s.cached = {{0, 0}, {0, 0}, {0, 0}, {0, 0}};
    CHECK(expected_cost(empty, s) == Catch::Approx(2.0 * 11.0));
  }

  SECTION("RNS routing with item 0 cached at node 1 costs 12") {
    IntegralStrategy s;
    s.route = {0, 0};
    s.cached = {{0, 0}, {1, 0}, {0, 1}, {0, 0}};
    CHECK(expected_cost(inst, s) == Catch::Approx(1.0 * 1.0 + 1.0 * 11.0));
  }

  SECTION("joint optimum costs 3 and gains 43") {
    IntegralStrategy s;
    s.route = {0, 1};
    s.cached = {{0, 0}, {1, 0}, {0, 1}, {0, 0}};
    CHECK(expected_cost(inst, s) == Catch::Approx(3.0));
    CHECK(empty_cache_cost(inst) == Catch::Approx(46.0));
    CHECK(caching_gain(inst, s) == Catch::Approx(43.0));
  }

  SECTION("infeasible state is rejected") {
    FractionalState s = uniform_state(inst);
    s.cache_probs[1][0] = 0.9;
    s.cache_probs[1][1] = 0.9;
    CHECK_THROWS_AS(expected_cost(inst, s), std::invalid_argument);
  }
}

TEST_CASE("caching the item at the source zeroes the cost") {
  ProblemInstance inst = line_instance(1.0, 5.0);
  inst.capacity = {1, 0, 0};
  inst.finalize();
  IntegralStrategy s;
  s.route = {0};
  s.cached = {{1}, {0}, {0}};
  CHECK(expected_cost(inst, s) == Catch::Approx(0.0));
  CHECK(caching_gain(inst, s) == Catch::Approx(empty_cache_cost(inst)));
}

TEST_CASE("empty demand has zero base cost") {
  ProblemInstance inst = line_instance();
  inst.classes.clear();
  inst.finalize();
  CHECK(empty_cache_cost(inst) == 0.0);
}

TEST_CASE("single class single path base cost") {
  ProblemInstance inst = line_instance(2.0, 3.0);
  inst.classes[0].rate = 2.0;
  inst.finalize();
  CHECK(empty_cache_cost(inst) == Catch::Approx(10.0));
}

TEST_CASE("surrogate saturates when selected paths hit a cache at the first hop") {
  ProblemInstance inst = line_instance();
  inst.capacity = {1, 0, 0};
  inst.finalize();
  FractionalState s = lift(inst, {{0}, {{1}, {0}, {0}}});
  CHECK(surrogate_gain(inst, s) == Catch::Approx(empty_cache_cost(inst)));
  CHECK(caching_gain(inst, s) == Catch::Approx(empty_cache_cost(inst)));
}

TEST_CASE("surrogate equals gain at zero caching with deterministic routing") {
  ProblemInstance inst = line_instance();
  inst.capacity = {0, 0, 0};
  inst.finalize();
  IntegralStrategy s;
  s.route = {0};
  s.cached = {{0}, {0}, {0}};
  FractionalState f = lift(inst, s);
  CHECK(surrogate_gain(inst, f) == Catch::Approx(caching_gain(inst, f)));

  // same algebra on the diamond: all min terms are 1-rho on selected paths
  ProblemInstance dia = make_diamond_instance(10.0);
  dia.capacity = {0, 0, 0, 0};
  dia.finalize();
  IntegralStrategy ds;
  ds.route = {0, 1};
  ds.cached.assign(4, {0, 0});
  FractionalState df = lift(dia, ds);
  CHECK(surrogate_gain(dia, df) == Catch::Approx(caching_gain(dia, df)));
}

TEST_CASE("sandwich inequality holds on random states") {
  Rng rng(1234);
  const double ratio = 1.0 - std::exp(-1.0);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance inst = testutil::random_instance(rng, 5, 3, 4, 3);
    if (inst.classes.empty()) continue;
    for (int rep = 0; rep < 100; ++rep) {
      FractionalState s = testutil::random_state(inst, rng);
      REQUIRE(is_feasible(inst, s));
      const double gain = caching_gain(inst, s);
      const double sur = surrogate_gain(inst, s);
      CHECK(gain >= -1e-9);
      CHECK(gain <= sur + 1e-9);
      CHECK(gain >= ratio * sur - 1e-9);
    }
  }
}

TEST_CASE("integral evaluation agrees exactly with the fractional lift") {
  Rng rng(555);
  for (int trial = 0; trial < 25; ++trial) {
    ProblemInstance inst = testutil::random_instance(rng, 5, 3, 3, 3);
    if (inst.classes.empty()) continue;
    IntegralStrategy s = testutil::random_integral(inst, rng);
    CHECK(expected_cost(inst, s) == expected_cost(inst, lift(inst, s)));
  }
}

TEST_CASE("sampling caches and paths from the marginals reproduces the expected cost") {
  ProblemInstance inst = make_diamond_instance(10.0);
  Rng rng(77);
  FractionalState s = testutil::random_state(inst, rng);
  const double exact = expected_cost(inst, s);

  const int samples = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < samples; ++t) {
    IntegralStrategy draw;
    draw.route.resize(inst.classes.size());
    for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
      draw.route[ci] = sample_path(s.route_probs[ci], rng);
    draw.cached.assign(inst.node_count, std::vector<std::uint8_t>(inst.item_count, 0));
    for (int v = 0; v < inst.node_count; ++v)
      for (int i : sample_cache_set(s.cache_probs[v], inst.capacity[v], rng))
        draw.cached[v][i] = 1;
    const double c = expected_cost(inst, draw);
    sum += c;
    sum_sq += c * c;
  }
  const double mean = sum / samples;
  const double var = (sum_sq / samples - mean * mean) / samples;
  const double se = std::sqrt(std::max(var, 1e-12));
  CHECK(std::fabs(mean - exact) <= 3.0 * se + 1e-9);
}

TEST_CASE("subgradient matches central finite differences away from kinks") {
  Rng rng(31337);
  const double h = 1e-6;
  int tested_states = 0;
  int guard = 0;
  while (tested_states < 5 && guard++ < 200) {
    ProblemInstance inst = testutil::random_instance(rng, 5, 2, 3, 3);
    if (inst.classes.empty()) continue;
    FractionalState s = testutil::random_state(inst, rng);
    // keep clear of the clip kinks so two-sided differences are valid
    bool interior = true;
    for (std::size_t ci = 0; ci < inst.classes.size() && interior; ++ci) {
      const RequestClass& rc = inst.classes[ci];
      for (std::size_t j = 0; j < rc.paths.size() && interior; ++j) {
        double cum = 1.0 - s.route_probs[ci][j];
        for (std::size_t k = 0; k + 1 < rc.paths[j].size(); ++k) {
          cum += s.cache_probs[rc.paths[j][k]][rc.item];
          if (std::fabs(cum - 1.0) < 1e-4) interior = false;
        }
      }
    }
    if (!interior) continue;
    ++tested_states;

    SubgradientPair g = surrogate_subgradient(inst, s);
    for (int v = 0; v < inst.node_count; ++v)
      for (int i = 0; i < inst.item_count; ++i) {
        FractionalState up = s, dn = s;
        up.cache_probs[v][i] += h;
        dn.cache_probs[v][i] -= h;
        const double fd =
            (surrogate_gain(inst, up, false) - surrogate_gain(inst, dn, false)) / (2 * h);
        CHECK(g.cache_grad[v][i] == Catch::Approx(fd).margin(1e-6));
      }
    for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
      for (std::size_t j = 0; j < inst.classes[ci].paths.size(); ++j) {
        FractionalState up = s, dn = s;
        up.route_probs[ci][j] += h;
        dn.route_probs[ci][j] -= h;
        const double fd =
            (surrogate_gain(inst, up, false) - surrogate_gain(inst, dn, false)) / (2 * h);
        CHECK(g.route_grad[ci][j] == Catch::Approx(fd).margin(1e-6));
      }
  }
  REQUIRE(tested_states == 5);
}

TEST_CASE("nodes off every path of an item have zero cache gradient") {
  ProblemInstance inst = make_diamond_instance(10.0);
  Rng rng(5);
  FractionalState s = testutil::random_state(inst, rng);
  SubgradientPair g = surrogate_subgradient(inst, s);
  // the server node is never an interior path node
  CHECK(g.cache_grad[3][0] == 0.0);
  CHECK(g.cache_grad[3][1] == 0.0);
}

TEST_CASE("single selected path with empty caches gives upstream weight sums") {
  ProblemInstance inst = line_instance(2.0, 7.0);
  inst.capacity = {0, 0, 0};
  inst.finalize();
  FractionalState s = lift(inst, {{0}, {{0}, {0}, {0}}});
  SubgradientPair g = surrogate_subgradient(inst, s);
  // cum stays at 1-rho = 0 (<= 1), so every hop is active
  CHECK(g.cache_grad[0][0] == Catch::Approx(2.0 + 7.0));
  CHECK(g.cache_grad[1][0] == Catch::Approx(7.0));
  CHECK(g.route_grad[0][0] == Catch::Approx(-(2.0 + 7.0)));
}

TEST_CASE("route gradient entries are non-positive, cache entries non-negative") {
  Rng rng(808);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance inst = testutil::random_instance(rng, 5, 3, 3, 3);
    if (inst.classes.empty()) continue;
    FractionalState s = testutil::random_state(inst, rng);
    SubgradientPair g = surrogate_subgradient(inst, s);
    for (const auto& row : g.cache_grad)
      for (double x : row) CHECK(x >= 0.0);
    for (const auto& row : g.route_grad)
      for (double x : row) CHECK(x <= 0.0);
  }
}

TEST_CASE("first-order concavity bound holds between random state pairs") {
  Rng rng(4242);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance inst = testutil::random_instance(rng, 5, 3, 3, 3);
    if (inst.classes.empty()) continue;
    for (int rep = 0; rep < 40; ++rep) {
      FractionalState x = testutil::random_state(inst, rng);
      FractionalState y = testutil::random_state(inst, rng);
      SubgradientPair g = surrogate_subgradient(inst, x);
      double linear = surrogate_gain(inst, x);
      for (std::size_t ci = 0; ci < inst.classes.size(); ++ci)
        for (std::size_t j = 0; j < x.route_probs[ci].size(); ++j)
          linear += g.route_grad[ci][j] * (y.route_probs[ci][j] - x.route_probs[ci][j]);
      for (int v = 0; v < inst.node_count; ++v)
        for (int i = 0; i < inst.item_count; ++i)
          linear += g.cache_grad[v][i] * (y.cache_probs[v][i] - x.cache_probs[v][i]);
      CHECK(surrogate_gain(inst, y) <= linear + 1e-9);
    }
  }
}
