#pragma once

#include <cstdint>
#include <random>

namespace roughball {

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for work item `index` of a run seeded with `master`. Depends only on the
/// pair, so results do not depend on worker count or scheduling order.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Named sub-streams, so different roles of one experiment never share seeds.
enum class Stream : std::uint64_t {
  paths = 1,
  reference = 2,
  atoms = 3,
  weights = 4,
  training = 5,
  testing = 6,
  mesh = 7,
  init = 8,
  auxiliary = 9,
};

constexpr std::uint64_t stream_seed(std::uint64_t master, Stream stream, std::uint64_t sub = 0) {
  return mix_seed(mix_seed(master, static_cast<std::uint64_t>(stream)), sub);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace roughball
