#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace moco {

std::uint64_t mix64(std::uint64_t x);

/// Seed derivation used everywhere a sub-stream is needed:
///   derive_seed(master, name, index) = mix64(mix64(master ^ fnv1a64(name)) + index)
/// The same (master, name, index) triple always yields the same seed, so a
/// single case of an experiment can be replayed in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index);

std::uint64_t fnv1a64(std::string_view text);

/// Counter-based generator: draw i is mix64(key + i * golden). State is just
/// (key, counter), so streams split by index never depend on the order in
/// which other streams were consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  bool coin(double probability);

  // Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace moco
