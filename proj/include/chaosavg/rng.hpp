#pragma once

// Philox4x32-10 counter-based generator. A stream is addressed by
// (key, tag, index); draws within a stream advance a 32-bit block counter,
// so any replication can be regenerated without replaying the others.

#include <array>
#include <cmath>
#include <cstdint>

namespace chaosavg {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

// Stream tags keep the different consumers of one master seed apart.
enum class StreamTag : std::uint32_t {
  seed_derivation = 1,
  field = 2,
  z_proposal = 3,
  brownian = 4,
  spectral_mc = 5,
  test = 99,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t key, StreamTag tag, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        tag_(static_cast<std::uint32_t>(tag)),
        index_(index) {}
  RandomStream(std::uint64_t key, std::uint64_t index) : RandomStream(key, StreamTag::field, index) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    buf_ = philox4x32({block_++, tag_, static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)},
                      key_);
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t tag_;
  std::uint64_t index_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed of replication `index` under `master`. Stored on every output row so a
// single replication can be replayed from its own seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  RandomStream s(master, StreamTag::seed_derivation, index);
  return s.next_u64();
}

}  // namespace chaosavg
