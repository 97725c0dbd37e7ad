#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairfpr/matrix.hpp"

namespace fairfpr {

struct ScoredPair {
  double similarity = 0.0;
  std::string group;

  bool operator==(const ScoredPair&) const = default;
};

/// Verification pair scores tagged with the demographic group they belong to.
struct GroupedScores {
  std::vector<ScoredPair> positives;  // same-identity pairs
  std::vector<ScoredPair> negatives;  // different-identity pairs
  std::vector<std::string> group_set;
  std::vector<std::string> warnings;  // e.g. groups excluded for single identity
};

/// Samples within-identity positive pairs and within-group cross-identity
/// negative pairs, at most `max_pairs_per_group` of each per group.
/// Groups with a single identity are excluded with a warning record.
/// Deterministic in seed; embeddings are expected row-normalized.
GroupedScores build_pairs(const Matrix& embeddings, const std::vector<int>& identity_labels,
                          const std::vector<std::string>& group_labels,
                          std::size_t max_pairs_per_group, std::uint64_t seed);

/// Fraction of negative pairs with similarity strictly above t.
double fpr_at(const GroupedScores& scores, double t,
              const std::optional<std::string>& group = std::nullopt);

/// Fraction of positive pairs with similarity strictly below t.
double fnr_at(const GroupedScores& scores, double t,
              const std::optional<std::string>& group = std::nullopt);

/// k-th largest negative similarity with k = ceil(gamma * N-) clamped to
/// [1, N-]; guarantees fpr_at(scores, t) <= gamma.
double threshold_for_overall_fpr(const GroupedScores& scores, double gamma);

/// (1/N_G) * sqrt( sum_g ((fpr_g - mean)/overall_fpr)^2 ), exactly as printed.
double bias_degree_from_rates(const std::vector<double>& group_fprs, double overall_fpr);

/// Bias degree at the threshold realizing overall FPR <= gamma. Groups with
/// no negative pairs are excluded; at least two groups must remain.
double bias_degree(const GroupedScores& scores, double gamma);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// `points` thresholds in ascending order: one below every score (fpr 1,
/// tpr 1), one above every score (fpr 0, tpr 0), interior points at evenly
/// spaced negative-score quantiles.
std::vector<RocPoint> roc(const GroupedScores& scores, const std::optional<std::string>& group,
                          std::size_t points);

struct AccuracyResult {
  double accuracy = 0.0;
  double best_threshold = 0.0;
};

/// Best (correct positives + correct negatives)/(N+ + N-) over all observed
/// scores as candidate thresholds; equality at the threshold counts as
/// correct, ties resolve to the smallest threshold.
AccuracyResult verification_accuracy(const GroupedScores& scores,
                                     const std::optional<std::string>& group = std::nullopt);

struct OperatingPoint {
  double gamma = 0.0;
  double threshold = 0.0;
  double overall_fpr = 0.0;
  double overall_fnr = 0.0;
  std::map<std::string, double> group_fpr;
  std::map<std::string, double> group_fnr;
  double fpr_std = 0.0;  // population std of group FPRs, raw rate units
  double bias_degree = 0.0;
};

struct FairnessReport {
  std::vector<std::string> groups;
  std::map<std::string, double> group_accuracy;
  std::map<std::string, double> group_accuracy_threshold;
  double accuracy_avg = 0.0;
  double accuracy_std = 0.0;  // population std across groups
  std::vector<OperatingPoint> levels;
  std::map<std::string, std::vector<RocPoint>> roc_curves;
  std::vector<std::string> warnings;
};

FairnessReport build_report(const GroupedScores& scores, const std::vector<double>& gammas,
                            std::size_t roc_points = 64);

std::string report_to_json_string(const FairnessReport& report);

/// report.json plus roc-<group>.csv (columns threshold,fpr,tpr) under dir.
void write_report_files(const FairnessReport& report, const std::string& dir);

double population_std(const std::vector<double>& values);

}  // namespace fairfpr
