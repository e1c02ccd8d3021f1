// Counter-based RNG (Philox2x64-10). Trajectory i draws from the stream keyed by
// (seed, i), so ensembles are reproducible under any execution order.
#pragma once

#include <cmath>
#include <cstdint>

namespace qs {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Philox {
 public:
  Philox(uint64_t seed, uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream ^ 0xA02B8F6B45C1F9ULL))) {}

  uint64_t next_u64() {
    if (have_buffered_) {
      have_buffered_ = false;
      return buffered_;
    }
    uint64_t c0 = counter_++;
    uint64_t c1 = 0x6A09E667F3BCC908ULL;  // block tweak
    uint64_t k = key_;
    for (int round = 0; round < 10; ++round) {
      const unsigned __int128 prod = static_cast<unsigned __int128>(kMultiplier) * c0;
      const uint64_t hi = static_cast<uint64_t>(prod >> 64);
      const uint64_t lo = static_cast<uint64_t>(prod);
      c0 = hi ^ k ^ c1;
      c1 = lo;
      k += kWeyl;
    }
    buffered_ = c1;
    have_buffered_ = true;
    return c0;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Knuth product method; exact for the moderate means used here.
  int poisson(double mean) {
    if (mean <= 0) return 0;
    const double limit = std::exp(-mean);
    int n = 0;
    double prod = uniform();
    while (prod > limit) {
      ++n;
      prod *= uniform();
    }
    return n;
  }

 private:
  static constexpr uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
  static constexpr uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

  uint64_t key_;
  uint64_t counter_ = 0;
  uint64_t buffered_ = 0;
  bool have_buffered_ = false;
};

}  // namespace qs
