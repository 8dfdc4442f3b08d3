#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace mfvi {

/// Philox-4x64-10 block function (Salmon et al., Random123). Maps a 256-bit
/// counter and a 128-bit key to 256 pseudo-random bits.
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                               std::array<std::uint64_t, 2> key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint64_t>(p1 >> 64) ^ ctr[1] ^ key[0],
           static_cast<std::uint64_t>(p1),
           static_cast<std::uint64_t>(p0 >> 64) ^ ctr[3] ^ key[1],
           static_cast<std::uint64_t>(p0)};
  }
  return ctr;
}

/// Counter-based random stream keyed by (seed, stream id).
///
/// Draw i of stream (s, id) is a pure function of (s, id, i), so sequences are
/// reproducible across runs and platforms and independent streams can be
/// handed to parallel workers. Copying a stream copies its position.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() {
    if (buffer_pos_ == buffer_.size()) {
      buffer_ = philox4x64({++counter_, 0, 0, 0}, {seed_, stream_});
      buffer_pos_ = 0;
    }
    return buffer_[buffer_pos_++];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(angle);
    have_spare_normal_ = true;
    return r * std::cos(angle);
  }

  /// Independent child stream; the child for a given id depends only on this
  /// stream's key, not on how many draws have been taken from it.
  RngStream substream(std::uint64_t id) const {
    const auto block = philox4x64({id, 0, 0, 1}, {seed_, stream_});
    return RngStream(block[0], block[1]);
  }

  /// Draw a fresh key and return the stream family it names. Used to give each
  /// Monte Carlo batch its own per-sample substreams.
  RngStream fork() { return RngStream(next_u64(), next_u64()); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  std::size_t buffer_pos_ = 4;
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

}  // namespace mfvi
