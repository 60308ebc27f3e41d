#pragma once

// Counter-style random streams and a deterministic parallel loop.
//
// Every consumer of randomness derives its own stream from a parent key plus
// integer tags (time step, particle, chain, zone ...). Streams are never
// shared between threads, so results do not depend on the worker count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace hdpf {

/// Tags used when deriving substreams. Values are part of the reproducibility
/// contract: changing one changes every seeded output.
namespace tag {
inline constexpr std::uint64_t kInitial = 0x11;
inline constexpr std::uint64_t kStep = 0x12;
inline constexpr std::uint64_t kProgress = 0x13;
inline constexpr std::uint64_t kResample = 0x14;
inline constexpr std::uint64_t kChain = 0x15;
inline constexpr std::uint64_t kZone = 0x16;
inline constexpr std::uint64_t kTrajectory = 0x17;
inline constexpr std::uint64_t kObserve = 0x18;
inline constexpr std::uint64_t kRun = 0x19;
inline constexpr std::uint64_t kAlgorithm = 0x1a;
}  // namespace tag

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a parent key with one tag into a child key.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// xoshiro256++ generator bound to a derivation key.
///
/// Satisfies UniformRandomBitGenerator, so it can drive <random>
/// distributions. `substream` never advances the parent's state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    const auto wide = static_cast<unsigned __int128>((*this)()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  double normal() { return normal_(*this); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t key() const { return key_; }

  Rng substream(std::uint64_t t) const { return Rng(derive_key(key_, t)); }

  template <class... Tags>
  Rng substream(std::uint64_t t, Tags... more) const {
    return substream(t).substream(static_cast<std::uint64_t>(more)...);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Number of worker threads used by `parallel_for`. Initialized from the
/// HDPF_THREADS environment variable, else the hardware concurrency.
int worker_count();
void set_worker_count(int n);

/// Runs fn(i) for i in [0, n) over contiguous chunks on up to worker_count()
/// threads. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hdpf
