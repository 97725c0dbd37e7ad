#include "fairfpr/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fairfpr {

namespace {

// Final scramble of splitmix64 (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ull;
  return mix64(state_);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Rng Rng::split(std::string_view label) const {
  return Rng(mix64(state_ ^ mix64(fnv1a64(label))));
}

std::vector<double> rng_standard_normal(Rng& rng, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rng_standard_normal: n must be >= 1");
  std::vector<double> out(n);
  for (double& x : out) x = rng.next_normal();
  return out;
}

}  // namespace fairfpr
