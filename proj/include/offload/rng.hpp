#pragma once

#include <cstdint>
#include <random>

namespace offload {

/// splitmix64 step; used to derive independent substream seeds from one
/// master seed so that adding a consumer never perturbs the others.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  Init = 1,      // network parameter initialization
  Noise = 2,     // exploration noise
  Sampling = 3,  // replay minibatch draws
  Topology = 4,  // station/device placement, fading
  Tasks = 5,     // per-episode task draws
  Eval = 6,      // evaluation episodes
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s) {
  return splitmix64(master ^ (0x51ed2701a3c5db91ULL * static_cast<std::uint64_t>(s)));
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index) {
  return splitmix64(derive_seed(master, s) ^ splitmix64(index));
}

/// Seeded random stream. One owner per stream; never shared across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

  /// Standard normal. The distribution caches its spare deviate, so draws
  /// from one stream form a single reproducible sequence.
  double normal() { return normal_(engine_); }

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace offload
