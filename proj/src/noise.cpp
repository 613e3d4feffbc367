#include "statcal/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace statcal {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Open interval (0, 1) from 64 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

inline std::array<double, 2> box_muller(const std::array<std::uint32_t, 4>& r) {
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> NoiseSource::counter_for(NoiseStream stream, std::uint64_t particle,
                                                      std::uint64_t step,
                                                      std::uint32_t component) {
  if (particle > 0xFFFFFFFFull) throw std::out_of_range("particle index exceeds 32 bits");
  const std::uint32_t block = component / 2;
  if (block > 0x0FFFFFFFu) throw std::out_of_range("component index exceeds 29 bits");
  return {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
          static_cast<std::uint32_t>(particle),
          (static_cast<std::uint32_t>(stream) << 28) | block};
}

double NoiseSource::normal(NoiseStream stream, std::uint64_t particle, std::uint64_t step,
                           std::uint32_t component) const {
  tally(stream, 1);
  const auto bits = philox4x32(counter_for(stream, particle, step, component),
                               {static_cast<std::uint32_t>(seed_),
                                static_cast<std::uint32_t>(seed_ >> 32)});
  return box_muller(bits)[component % 2];
}

void NoiseSource::fill_normal(NoiseStream stream, std::uint64_t particle, std::uint64_t step,
                              std::span<double> out) const {
  tally(stream, out.size());
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  for (std::size_t c = 0; c < out.size(); c += 2) {
    const auto z = box_muller(
        philox4x32(counter_for(stream, particle, step, static_cast<std::uint32_t>(c)), key));
    out[c] = z[0];
    if (c + 1 < out.size()) out[c + 1] = z[1];
  }
}

void NoiseSource::tally(NoiseStream stream, std::uint64_t n) const {
  if (counts_ == nullptr) return;
  switch (stream) {
    case NoiseStream::main: counts_->main.fetch_add(n, std::memory_order_relaxed); break;
    case NoiseStream::replica: counts_->replica.fetch_add(n, std::memory_order_relaxed); break;
    case NoiseStream::oracle: counts_->oracle.fetch_add(n, std::memory_order_relaxed); break;
  }
}

}  // namespace statcal
