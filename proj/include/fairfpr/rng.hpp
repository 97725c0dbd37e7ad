#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fairfpr {

/// splitmix64-based generator: 64 bits of state, one multiply-xorshift scramble
/// per draw. Identical seeds give identical streams on every platform.
/// `split` derives an independent sub-stream keyed by a label, so modules
/// (data, init, shuffling, ...) can consume randomness without interleaving.
///
/// Instances are cheap values; do not share one instance across threads.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double next_unit();

  /// Standard normal via Box-Muller; the paired draw is cached.
  double next_normal();

  /// Sub-stream keyed by (current state, label). Does not advance this stream.
  Rng split(std::string_view label) const;

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n standard-normal draws; deterministic for a fixed rng state.
std::vector<double> rng_standard_normal(Rng& rng, std::size_t n);

}  // namespace fairfpr
