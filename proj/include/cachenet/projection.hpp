#ifndef CACHENET_PROJECTION_HPP
#define CACHENET_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cachenet {

// Euclidean projection onto the capped simplex {y in [0,1]^n : sum y = c}.
// The projection is y_i = clip(v_i - theta, 0, 1) for the theta at which the
// coordinate sum equals c; theta is found exactly from the sorted breakpoints
// of the piecewise-linear sum.
inline std::vector<double> project_capped_simplex(const std::vector<double>& v, int c) {
  const int n = static_cast<int>(v.size());
  if (c < 0 || c > n)
    throw std::invalid_argument("project_capped_simplex: capacity out of range");
  if (c == 0) return std::vector<double>(n, 0.0);
  if (c == n) return std::vector<double>(n, 1.0);

  std::vector<double> breaks;
  breaks.reserve(2 * n);
  for (double x : v) {
    breaks.push_back(x - 1.0);
    breaks.push_back(x);
  }
  std::sort(breaks.begin(), breaks.end());

  auto sum_at = [&v](double theta) {
    double s = 0.0;
    for (double x : v) s += std::clamp(x - theta, 0.0, 1.0);
    return s;
  };

  // sum_at is non-increasing in theta; locate the segment containing the
  // target and solve the linear equation inside it.
  double lo = breaks.front(), hi = breaks.back();
  if (sum_at(lo) < c) {
    // all coordinates at their caps still fall short only when c > n, which
    // is excluded above; keep the leftmost breakpoint
    hi = lo;
  } else {
    int a = 0, b = static_cast<int>(breaks.size()) - 1;
    while (b - a > 1) {
      const int mid = (a + b) / 2;
      if (sum_at(breaks[mid]) >= c)
        a = mid;
      else
        b = mid;
    }
    lo = breaks[a];
    hi = breaks[b];
  }

  double theta = lo;
  if (hi > lo) {
    // inside (lo, hi): active set is fixed, sum is affine in theta
    const double mid = 0.5 * (lo + hi);
    double fixed = 0.0;
    int active = 0;
    for (double x : v) {
      const double y = x - mid;
      if (y >= 1.0)
        fixed += 1.0;
      else if (y > 0.0) {
        fixed += x;
        ++active;
      }
    }
    if (active > 0)
      theta = (fixed - c) / active;
    else
      theta = lo;  // flat segment, any point attains the target sum
    theta = std::clamp(theta, lo, hi);
  }

  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = std::clamp(v[i] - theta, 0.0, 1.0);
  return y;
}

// Projection onto the probability simplex (capped simplex with c = 1).
inline std::vector<double> project_simplex(const std::vector<double>& v) {
  return project_capped_simplex(v, 1);
}

}  // namespace cachenet

#endif  // CACHENET_PROJECTION_HPP
