#pragma once

#include <cstddef>
#include <span>

namespace fairfpr {

/// k-th largest element counting duplicates (k=1 is the maximum).
/// Randomized three-way quickselect, expected linear time; ties cost O(n).
/// Throws std::invalid_argument on empty input or k outside [1, n].
double kth_largest(std::span<const double> values, std::size_t k);

/// Same selection on caller-owned scratch; reorders `values`.
double kth_largest_inplace(std::span<double> values, std::size_t k);

}  // namespace fairfpr
