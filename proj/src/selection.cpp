#include "fairfpr/selection.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fairfpr {

namespace {

// Local splitmix step for pivot choice; the selected value does not depend
// on the pivot sequence.
std::uint64_t pivot_step(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

double kth_largest_inplace(std::span<double> v, std::size_t k) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("kth_largest: empty input");
  if (k < 1 || k > n) throw std::invalid_argument("kth_largest: k out of range");

  std::uint64_t rng_state = 0x6A09E667F3BCC908ull ^ (n * 0x9E3779B97F4A7C15ull);
  std::size_t lo = 0, hi = n;           // active half-open range
  std::size_t target = k - 1;           // rank in descending order
  while (true) {
    if (hi - lo == 1) return v[lo];
    const double pivot = v[lo + pivot_step(rng_state) % (hi - lo)];
    // Three-way partition, descending: [lo,gt) > pivot, [gt,i) == pivot, [i,hi) < pivot.
    std::size_t gt = lo, i = lo, lt = hi;
    while (i < lt) {
      if (v[i] > pivot) {
        std::swap(v[i], v[gt]);
        ++gt;
        ++i;
      } else if (v[i] < pivot) {
        --lt;
        std::swap(v[i], v[lt]);
      } else {
        ++i;
      }
    }
    if (target < gt - lo) {
      hi = gt;
    } else if (target < lt - lo) {
      return pivot;
    } else {
      target -= lt - lo;
      lo = lt;
    }
  }
}

double kth_largest(std::span<const double> values, std::size_t k) {
  std::vector<double> scratch(values.begin(), values.end());
  return kth_largest_inplace(scratch, k);
}

}  // namespace fairfpr
