#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace twincf {

/// Coordinates of one independent noise stream. Any (seed, stream_id,
/// replicate_id) triple reproduces the same sequence; distinct triples give
/// statistically independent sequences.
struct NoiseRecord {
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;
  std::uint32_t replicate_id = 0;
};

/// Mixes a 64-bit seed with a domain tag so that, e.g., the world generator
/// and a simulator given the same user seed never share streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Counter-based generator (Philox4x32-10) keyed by the seed, with the
/// stream and replicate ids occupying the upper counter words. There is no
/// hidden state beyond the position within the stream, so streams can be
/// created anywhere (including inside parallel loops) without coordination.
class NoiseStream {
 public:
  explicit NoiseStream(const NoiseRecord& record) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double normal() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Single-block Philox4x32-10; exposed for the known-answer test.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

}  // namespace twincf
