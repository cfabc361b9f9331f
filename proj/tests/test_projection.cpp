#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cachenet/projection.hpp"
#include "cachenet/rng.hpp"

using namespace cachenet;

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

bool in_capped_simplex(const std::vector<double>& y, int c, double tol = 1e-9) {
  double sum = 0.0;
  for (double x : y) {
    if (x < -tol || x > 1.0 + tol) return false;
    sum += x;
  }
  return std::fabs(sum - c) <= tol;
}

}  // namespace

TEST_CASE("projection is the identity on feasible points") {
  std::vector<double> v{0.25, 0.5, 0.25};
  auto y = project_capped_simplex(v, 1);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(y[i] == Catch::Approx(v[i]).margin(1e-12));
}

TEST_CASE("symmetric point splits evenly") {
  auto y = project_capped_simplex({0.9, 0.9}, 1);
  CHECK(y[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(y[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("clipping saturates at the box") {
  auto y = project_capped_simplex({2.0, -1.0, 0.2}, 1);
  CHECK(y[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(y[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(y[2] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("degenerate capacities") {
  CHECK(project_capped_simplex({0.3, 0.8}, 0) == std::vector<double>{0.0, 0.0});
  CHECK(project_capped_simplex({0.3, 0.8}, 2) == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(project_capped_simplex({0.3}, 2), std::invalid_argument);
}

TEST_CASE("projection beats random feasible candidates") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + rng.uniform_int(6);
    const int c = 1 + rng.uniform_int(n);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 3.0);
    auto y = project_capped_simplex(v, c);
    REQUIRE(in_capped_simplex(y, c));
    const double dy = dist2(v, y);
    for (int cand = 0; cand < 200; ++cand) {
      std::vector<double> u(n);
      for (double& x : u) x = rng.uniform(0.0, 1.0);
      u = project_capped_simplex(u, c);  // feasible candidate
      CHECK(dist2(v, u) >= dy - 1e-9);
    }
  }
}

TEST_CASE("projection satisfies the variational inequality") {
  // <v - y, u - y> <= 0 for all feasible u characterizes the projection
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + rng.uniform_int(5);
    const int c = 1 + rng.uniform_int(n - 1);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.5, 2.5);
    auto y = project_capped_simplex(v, c);
    for (int cand = 0; cand < 50; ++cand) {
      std::vector<double> u(n);
      for (double& x : u) x = rng.uniform(0.0, 1.0);
      u = project_capped_simplex(u, c);
      double ip = 0.0;
      for (int i = 0; i < n; ++i) ip += (v[i] - y[i]) * (u[i] - y[i]);
      CHECK(ip <= 1e-9);
    }
  }
}
