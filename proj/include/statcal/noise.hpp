#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <span>

namespace statcal {

/// Philox4x32-10 block: 128-bit counter, 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Which Brownian motion a variate belongs to. The tangent process has
/// no stream of its own: it reuses the main increments.
enum class NoiseStream : std::uint32_t { main = 0, replica = 1, oracle = 2 };

/// Tallies of variates handed out per stream, for auditing.
struct DrawCounts {
  std::atomic<std::uint64_t> main{0};
  std::atomic<std::uint64_t> replica{0};
  std::atomic<std::uint64_t> oracle{0};
};

/// Counter-based standard normal generator.
///
/// The variate at (stream, particle, step, component) is a pure function
/// of the seed and that address, so results do not depend on how particles
/// are distributed over workers or in which order they are drawn.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double normal(NoiseStream stream, std::uint64_t particle, std::uint64_t step,
                std::uint32_t component) const;

  /// Fills `out` with the components 0..size-1 of one address.
  void fill_normal(NoiseStream stream, std::uint64_t particle, std::uint64_t step,
                   std::span<double> out) const;

  /// Philox counter used for a given address; consecutive component pairs
  /// share one block.
  static std::array<std::uint32_t, 4> counter_for(NoiseStream stream, std::uint64_t particle,
                                                  std::uint64_t step, std::uint32_t component);

  /// Optional tally; must outlive the source while attached.
  void attach_counter(DrawCounts* counts) noexcept { counts_ = counts; }

 private:
  void tally(NoiseStream stream, std::uint64_t n) const;

  std::uint64_t seed_;
  DrawCounts* counts_ = nullptr;
};

}  // namespace statcal
