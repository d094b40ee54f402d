#pragma once

#include <cmath>
#include <cstdint>

namespace qscan {

// splitmix64 finalizer; used to fold seeds and stream ids into Philox keys.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based generator (Philox4x32-10). A stream is keyed by
// (seed, stream id); draws inside a stream walk a 128-bit counter. Streams
// are independent of evaluation order, which is what makes threaded
// replicates reproducible: replicate r always uses stream r regardless of
// which worker runs it. Only integer arithmetic, so the sequence is identical
// on every platform.
class Rng {
public:
  Rng(uint64_t seed, uint64_t stream) {
    const uint64_t k = mix64(mix64(seed) ^ (stream * 0xD6E8FEB86659FD93ull + 1));
    key0_ = static_cast<uint32_t>(k);
    key1_ = static_cast<uint32_t>(k >> 32);
  }

  // Next 64 uniform bits.
  uint64_t next_u64() {
    if (have_ >= 2) {
      have_ = 0;
      bump_counter();
      philox();
    }
    const uint64_t lo = out_[2 * have_];
    const uint64_t hi = out_[2 * have_ + 1];
    ++have_;
    return lo | (hi << 32);
  }

  uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe to feed to log().
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  uint64_t uniform_int(uint64_t bound) {
    if (bound == 0) return 0;
    const uint64_t limit = (~uint64_t{0}) - ((~uint64_t{0}) % bound + 1) % bound;
    uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return x % bound;
  }

  // Standard normal via Box-Muller (explicit so the stream is reproducible;
  // std::normal_distribution's algorithm is implementation-defined).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  void bump_counter() {
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
  }

  static void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    const uint64_t prod = static_cast<uint64_t>(a) * static_cast<uint64_t>(b);
    hi = static_cast<uint32_t>(prod >> 32);
    lo = static_cast<uint32_t>(prod);
  }

  void philox() {
    uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      const uint32_t n0 = hi1 ^ c1 ^ k0;
      const uint32_t n1 = lo1;
      const uint32_t n2 = hi0 ^ c3 ^ k1;
      const uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
  }

  uint32_t key0_ = 0, key1_ = 0;
  uint32_t ctr_[4] = {0, 0, 0, 0};
  uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 2;  // forces a philox() call on first use
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qscan
