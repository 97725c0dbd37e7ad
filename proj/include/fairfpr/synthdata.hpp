#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairfpr/matrix.hpp"

namespace fairfpr {

/// Geometry of one demographic group. `center_concentration` is the scatter
/// of identity centers around the group anchor: a smaller value packs the
/// identities of the group closer together on the sphere, which raises the
/// within-group non-target similarity and with it the group's FPR.
struct GroupSpec {
  std::string group_id;
  std::size_t identity_count = 0;
  std::size_t samples_per_identity = 0;
  double intra_spread = 0.0;
  double center_concentration = 0.0;

  bool operator==(const GroupSpec&) const = default;
};

struct Dataset {
  Matrix features;                       // N x raw_dim, unit-norm rows
  std::vector<int> identity_labels;      // contiguous 0..c-1
  std::vector<std::string> group_labels; // per row
  std::vector<GroupSpec> spec;
  std::uint64_t seed = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t raw_dim() const { return features.cols(); }
  int class_count() const;
  std::vector<std::string> group_set() const;  // sorted unique labels

  bool operator==(const Dataset&) const = default;
};

void validate(const std::vector<GroupSpec>& specs);

/// Draws, per group, an anchor direction, identity centers around it on the
/// unit sphere, and unit-normalized noisy samples per identity.
/// Deterministic in (specs, raw_dim, seed).
Dataset generate(const std::vector<GroupSpec>& specs, std::size_t raw_dim, std::uint64_t seed);

/// Writes `<base>.header.json` + `<base>.features.csv`. load(save(d)) == d.
void save(const Dataset& d, const std::string& path_base);
Dataset load(const std::string& path_base);

/// Holds out `holdout_identities_per_group` identities per group for eval.
/// Identity labels in both parts are relabeled to stay contiguous.
std::pair<Dataset, Dataset> split(const Dataset& d, std::size_t holdout_identities_per_group,
                                  std::uint64_t seed);

}  // namespace fairfpr
