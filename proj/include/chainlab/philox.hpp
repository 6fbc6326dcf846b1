#pragma once

#include <cmath>
#include <cstdint>

namespace chainlab {

// Philox-4x32-10 counter-based generator (Salmon et al. constants).  The
// mapping from (seed, stream, draw index) to output is fixed so that oracle
// results are reproducible bit-for-bit across runs and platforms; see the
// README for the exact conventions.
class Philox4x32 {
 public:
  struct Block {
    uint32_t x[4];
  };

  static Block generate(uint64_t seed, uint64_t stream, uint64_t index) {
    uint32_t key0 = static_cast<uint32_t>(seed);
    uint32_t key1 = static_cast<uint32_t>(seed >> 32);
    uint32_t c0 = static_cast<uint32_t>(index);
    uint32_t c1 = static_cast<uint32_t>(index >> 32);
    uint32_t c2 = static_cast<uint32_t>(stream);
    uint32_t c3 = static_cast<uint32_t>(stream >> 32);
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = 0xD2511F53ull * c0;
      const uint64_t p1 = 0xCD9E8D57ull * c2;
      const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
      const uint32_t lo0 = static_cast<uint32_t>(p0);
      const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
      const uint32_t lo1 = static_cast<uint32_t>(p1);
      const uint32_t n0 = hi1 ^ c1 ^ key0;
      const uint32_t n1 = lo1;
      const uint32_t n2 = hi0 ^ c3 ^ key1;
      const uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      key0 += 0x9E3779B9u;
      key1 += 0xBB67AE85u;
    }
    return Block{{c0, c1, c2, c3}};
  }
};

// Standard normals from one Philox stream: block i yields a Box-Muller pair
// from two 53-bit uniforms in (0, 1].
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto b = Philox4x32::generate(seed_, stream_, index_++);
    const double u1 = to_unit(b.x[0], b.x[1]);
    const double u2 = to_unit(b.x[2], b.x[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  static double to_unit(uint32_t hi, uint32_t lo) {
    const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
    return ((bits >> 11) + 1) * 0x1.0p-53; // (0, 1]
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t index_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace chainlab
