#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). A generator is addressed by a 64-bit key and
// a 64-bit stream id; the remaining 64 counter bits enumerate output blocks.
// Two generators with the same (key, stream) produce identical sequences on
// every platform, which is what trajectory reproducibility relies on.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rbsgd {

__extension__ using uint128 = unsigned __int128;

class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t key, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream) {}

  /// The raw bijection: ten Philox rounds applied to `counter` under `key`.
  static Block Encrypt(Block counter, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

  /// Independent generator sharing this key on another stream.
  Philox Split(std::uint64_t stream) const noexcept {
    Philox other(0, stream);
    other.key_ = key_;
    return other;
  }

  std::uint64_t NextU64() noexcept {
    if (lane_ == 2) Refill();
    return buffer_[lane_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double Uniform01() noexcept { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) noexcept { return lo + (hi - lo) * Uniform01(); }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-and-reject).
  std::uint64_t Below(std::uint64_t bound) noexcept {
    uint128 product = static_cast<uint128>(NextU64()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<uint128>(NextU64()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double Normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // (0, 1] keeps the log finite.
    const double u1 = static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = Uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t blocks_consumed() const noexcept { return block_; }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

  void Refill() noexcept {
    const Block counter = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                           static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const Block out = Encrypt(counter, key_);
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    ++block_;
    lane_ = 0;
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream ids reserved for problem generation; trajectory streams use the run id
// directly, so these sit at the top of the 64-bit range.
inline constexpr std::uint64_t kStreamScaling = 0xFFFF'FFFF'FFFF'FF00ULL;
inline constexpr std::uint64_t kStreamAlphas = kStreamScaling + 1;
inline constexpr std::uint64_t kStreamConstraints = kStreamScaling + 2;
inline constexpr std::uint64_t kStreamVerification = kStreamScaling + 3;

}  // namespace rbsgd
