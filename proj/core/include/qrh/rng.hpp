#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace qrh {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// Identifies one independent stream of standard normals. Streams are keyed by
/// the run seed and three 32-bit coordinates, so any path can be regenerated in
/// isolation and the draws never depend on how work is divided.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t tag = 0;    // stream family (outer paths, inner paths at a given restart step, ...)
  std::uint32_t major = 0;  // e.g. path index
  std::uint32_t minor = 0;  // e.g. parent outer path for inner streams
};

/// Fills `out` with the first out.size() standard normals of `stream`
/// (Box-Muller on 53-bit uniforms; normal i uses counter block i / 2).
void fill_normals(const StreamId& stream, std::span<double> out) noexcept;

/// Stream tags used by the simulator.
inline constexpr std::uint32_t kOuterStreamTag = 0;
inline constexpr std::uint32_t restart_stream_tag(std::uint32_t restart_step) noexcept {
  return 1u + restart_step;
}

}  // namespace qrh
