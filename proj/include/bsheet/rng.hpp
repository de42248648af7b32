#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace bsheet {

// Counter-based generator (Philox4x32-10). The key is derived from the
// experiment seed and the stream id, so trial i of seed s always sees the
// same numbers regardless of how trials are scheduled across threads.
class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    ctr_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      block_ = round10(ctr_, key_);
      increment();
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block round10(Block c, Key k) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    return c;
  }

  void increment() {
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  Key key_{};
  Block ctr_{};
  Block block_{};
  int pos_ = 4;
};

// Seeded stream with the two draws every module needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(seed, stream) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Substream for trial i of this seed.
  static Rng substream(std::uint64_t seed, std::uint64_t trial) { return Rng(seed, trial); }

  std::uint64_t seed() const { return engine_.seed(); }
  std::uint64_t stream() const { return engine_.stream(); }
  Philox& engine() { return engine_; }

 private:
  Philox engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace bsheet
