#ifndef WULFF_CORE_HPP
#define WULFF_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wulff {

// Hypersurface dimension n ranges over 2..5, so ambient vectors have at most 6
// components.  Fixed capacity keeps the per-node algebra off the heap.
using VecA = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using MatA = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
// Tangent-space objects (dimension n <= 5).
using VecT = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 5, 1>;
using MatT = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AdmissibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Deterministic RNG.  splitmix64 whitens (seed, stream) pairs so independent
// streams (MC strata, random bodies) never share state regardless of how many
// threads consume them.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    state_[0] = splitmix64(s);
    state_[1] = splitmix64(s);
    if (state_[0] == 0 && state_[1] == 0) state_[0] = 1;
  }

  // xoroshiro128+
  std::uint64_t next_u64() {
    std::uint64_t s0 = state_[0], s1 = state_[1];
    std::uint64_t result = s0 + s1;
    s1 ^= s0;
    state_[0] = ((s0 << 24) | (s0 >> 40)) ^ s1 ^ (s1 << 16);
    state_[1] = (s1 << 37) | (s1 >> 27);
    return result;
  }

  double uniform() {  // [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    // Marsaglia polar; deterministic consumption order.
    while (true) {
      double u = uniform(-1.0, 1.0), v = uniform(-1.0, 1.0);
      double r2 = u * u + v * v;
      if (r2 > 0.0 && r2 < 1.0) return u * std::sqrt(-2.0 * std::log(r2) / r2);
    }
  }

 private:
  std::uint64_t state_[2];
};

// ---------------------------------------------------------------------------
// Parallel map over an index range.  Work is split into fixed-size chunks that
// do not depend on the thread count, so any reduction that combines per-chunk
// partials in chunk order is bit-reproducible for every value of WULFF_THREADS.

inline int max_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("WULFF_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0 && cap < hw) hw = cap;
  }
  return hw;
}

inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body,
                         std::int64_t chunk = 1024) {
  if (count <= 0) return;
  int threads = max_threads();
  std::int64_t nchunks = (count + chunk - 1) / chunk;
  if (threads <= 1 || nchunks <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  std::int64_t per = (nchunks + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t c0 = t * per, c1 = std::min(nchunks, c0 + per);
    if (c0 >= c1) break;
    pool.emplace_back([&, c0, c1]() {
      for (std::int64_t c = c0; c < c1; ++c)
        body(c * chunk, std::min(count, (c + 1) * chunk));
    });
  }
  for (auto& th : pool) th.join();
}

// Deterministic chunked sum: identical result for any thread count.
template <typename F>
double chunked_sum(std::int64_t count, F&& term, std::int64_t chunk = 1024) {
  if (count <= 0) return 0.0;
  std::int64_t nchunks = (count + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
  parallel_for(
      count,
      [&](std::int64_t i0, std::int64_t i1) {
        double acc = 0.0;
        for (std::int64_t i = i0; i < i1; ++i) acc += term(i);
        partial[static_cast<std::size_t>(i0 / chunk)] = acc;
      },
      chunk);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

inline double sqr(double x) { return x * x; }

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Surface measure of the unit sphere S^m in R^{m+1}.
inline double sphere_area(int m) {
  return 2.0 * std::pow(kPi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

// Volume of the unit ball in R^d.
inline double ball_volume(int d) { return sphere_area(d - 1) / d; }

}  // namespace wulff

#endif
