#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pvda {

// Seeded generator with explicit, platform-independent distributions.
// std::*_distribution is implementation-defined, so uniform/normal are
// derived from the raw mt19937_64 stream directly; two runs with the same
// seed produce bit-identical sequences.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (no cached spare, fully stateless per draw pair).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t raw() { return gen_(); }

  // Full generator state as text; round-trips bit-exactly.
  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 gen_;
};

// Stable per-consumer seed derivation so that adding or removing one
// component does not shift the streams of the others.
std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& stream_name);

}  // namespace pvda
