#ifndef CACHENET_RNG_HPP
#define CACHENET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cachenet {

// splitmix64 finalizer, used to derive independent stream seeds from a root
// seed plus a tag. Streams derived from distinct (root, tag) pairs are
// decorrelated, which keeps simulations reproducible when the set of streams
// consumed changes between policy variants.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random stream. All samplers are hand-rolled on top of
// mt19937_64 so that traces are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed ? seed : 0x853c49e6748fea9bull) {}

  static Rng stream(std::uint64_t root, std::uint64_t tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
    std::uint64_t s = mix64(root);
    s = mix64(s ^ mix64(tag + 0x100));
    s = mix64(s ^ mix64(a + 0x10000));
    s = mix64(s ^ mix64(b + 0x1000000));
    return Rng(s);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // rejection sampling to avoid modulo bias
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  double exponential(double rate) {
    if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log1p(-uniform()) / rate;
  }

  // Exact Poisson sampling (Knuth); means above 500 are split so the
  // running product never underflows.
  int poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    int total = 0;
    while (mean > 500.0) {
      total += poisson_knuth(250.0);
      mean -= 250.0;
    }
    return total + poisson_knuth(mean);
  }

  // categorical draw over non-negative weights; never selects a zero-weight
  // index
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: all weights zero");
    const double u = uniform() * total;
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (weights[j] <= 0.0) continue;
      cum += weights[j];
      last_positive = static_cast<int>(j);
      if (u < cum) return static_cast<int>(j);
    }
    return last_positive;  // guards against floating roundoff at the top end
  }

  std::uint64_t raw() { return gen_(); }

 private:
  int poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    double prod = 1.0;
    int k = 0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k - 1;
  }

  std::mt19937_64 gen_;
};

}  // namespace cachenet

#endif  // CACHENET_RNG_HPP
