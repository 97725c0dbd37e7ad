#include "fairfpr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fairfpr/error.hpp"
#include "fairfpr/rng.hpp"
#include "fairfpr/selection.hpp"
#include "fairfpr/textio.hpp"

namespace fairfpr {

using nlohmann::json;

namespace {

std::vector<double> filtered(const std::vector<ScoredPair>& pairs,
                             const std::optional<std::string>& group) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    if (!group || p.group == *group) out.push_back(p.similarity);
  return out;
}

}  // namespace

double population_std(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double fpr_at(const GroupedScores& scores, double t, const std::optional<std::string>& group) {
  const auto neg = filtered(scores.negatives, group);
  if (neg.empty())
    throw std::invalid_argument("fpr_at: no negative pairs" +
                                (group ? " for group '" + *group + "'" : std::string()));
  std::size_t above = 0;
  for (double s : neg)
    if (s > t) ++above;
  return static_cast<double>(above) / static_cast<double>(neg.size());
}

double fnr_at(const GroupedScores& scores, double t, const std::optional<std::string>& group) {
  const auto pos = filtered(scores.positives, group);
  if (pos.empty())
    throw std::invalid_argument("fnr_at: no positive pairs" +
                                (group ? " for group '" + *group + "'" : std::string()));
  std::size_t below = 0;
  for (double s : pos)
    if (s < t) ++below;
  return static_cast<double>(below) / static_cast<double>(pos.size());
}

double threshold_for_overall_fpr(const GroupedScores& scores, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("threshold_for_overall_fpr: gamma must be in (0, 1)");
  auto neg = filtered(scores.negatives, std::nullopt);
  if (neg.empty()) throw std::invalid_argument("threshold_for_overall_fpr: no negative pairs");
  const double raw_k = std::ceil(gamma * static_cast<double>(neg.size()));
  const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(raw_k), 1, neg.size());
  return kth_largest_inplace(neg, k);
}

double bias_degree_from_rates(const std::vector<double>& group_fprs, double overall_fpr) {
  if (group_fprs.size() < 2)
    throw IncompatibleError("bias degree requires at least 2 groups with negative pairs");
  if (overall_fpr == 0.0)
    throw std::runtime_error(
        "bias degree undefined: realized overall FPR is 0 at this threshold (raise gamma or add "
        "negative pairs)");
  double mu = 0.0;
  for (double g : group_fprs) mu += g;
  mu /= static_cast<double>(group_fprs.size());
  double acc = 0.0;
  for (double g : group_fprs) {
    const double dev = (g - mu) / overall_fpr;
    acc += dev * dev;
  }
  return std::sqrt(acc) / static_cast<double>(group_fprs.size());
}

double bias_degree(const GroupedScores& scores, double gamma) {
  const double t = threshold_for_overall_fpr(scores, gamma);
  std::vector<double> rates;
  for (const auto& g : scores.group_set) {
    if (filtered(scores.negatives, g).empty()) continue;  // excluded from delta
    rates.push_back(fpr_at(scores, t, g));
  }
  return bias_degree_from_rates(rates, fpr_at(scores, t));
}

std::vector<RocPoint> roc(const GroupedScores& scores, const std::optional<std::string>& group,
                          std::size_t points) {
  if (points < 2) throw std::invalid_argument("roc: need at least 2 points");
  auto neg = filtered(scores.negatives, group);
  auto pos = filtered(scores.positives, group);
  if (neg.empty() || pos.empty()) throw std::invalid_argument("roc: empty pair set");

  double lo = neg[0], hi = neg[0];
  for (double s : neg) lo = std::min(lo, s), hi = std::max(hi, s);
  for (double s : pos) lo = std::min(lo, s), hi = std::max(hi, s);

  std::sort(neg.begin(), neg.end());
  std::vector<double> thresholds;
  thresholds.push_back(lo - 1e-9);
  for (std::size_t i = 1; i + 1 < points; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(neg.size() - 1));
    thresholds.push_back(neg[idx]);
  }
  thresholds.push_back(hi + 1e-9);
  std::sort(thresholds.begin(), thresholds.end());

  std::vector<RocPoint> out;
  out.reserve(points);
  for (double t : thresholds)
    out.push_back({t, fpr_at(scores, t, group), 1.0 - fnr_at(scores, t, group)});
  return out;
}

AccuracyResult verification_accuracy(const GroupedScores& scores,
                                     const std::optional<std::string>& group) {
  auto pos = filtered(scores.positives, group);
  auto neg = filtered(scores.negatives, group);
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("verification_accuracy: empty pair set");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> candidates;
  candidates.reserve(pos.size() + neg.size());
  candidates.insert(candidates.end(), pos.begin(), pos.end());
  candidates.insert(candidates.end(), neg.begin(), neg.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double total = static_cast<double>(pos.size() + neg.size());
  AccuracyResult best{-1.0, 0.0};
  for (double t : candidates) {
    // Equality at the threshold counts as correct on both sides.
    const auto pos_ok = static_cast<double>(
        pos.end() - std::lower_bound(pos.begin(), pos.end(), t));  // # pos >= t
    const auto neg_ok = static_cast<double>(
        std::upper_bound(neg.begin(), neg.end(), t) - neg.begin());  // # neg <= t
    const double acc = (pos_ok + neg_ok) / total;
    if (acc > best.accuracy) best = {acc, t};  // strict >: smallest threshold wins ties
  }
  return best;
}

GroupedScores build_pairs(const Matrix& embeddings, const std::vector<int>& identity_labels,
                          const std::vector<std::string>& group_labels,
                          std::size_t max_pairs_per_group, std::uint64_t seed) {
  if (embeddings.rows() != identity_labels.size() || embeddings.rows() != group_labels.size())
    throw std::invalid_argument("build_pairs: rows/labels size mismatch");
  if (max_pairs_per_group == 0) throw std::invalid_argument("build_pairs: max_pairs_per_group 0");

  // group -> identity -> row indices, ordered for determinism.
  std::map<std::string, std::map<int, std::vector<std::size_t>>> by_group;
  for (std::size_t i = 0; i < embeddings.rows(); ++i)
    by_group[group_labels[i]][identity_labels[i]].push_back(i);

  GroupedScores out;
  const Rng root = Rng(seed).split("pairs");
  using RowPair = std::pair<std::size_t, std::size_t>;

  auto subsample = [](std::vector<RowPair>& pairs, std::size_t max_count, Rng rng) {
    if (pairs.size() <= max_count) return;
    for (std::size_t i = 0; i < max_count; ++i) {
      const std::size_t j = i + rng.next_u64() % (pairs.size() - i);
      std::swap(pairs[i], pairs[j]);
    }
    pairs.resize(max_count);
  };

  for (const auto& [gname, ids] : by_group) {
    if (ids.size() < 2) {
      out.warnings.push_back("group '" + gname + "' excluded: fewer than 2 identities");
      continue;
    }
    std::vector<RowPair> pos;
    for (const auto& [id, rows] : ids)
      for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) pos.emplace_back(rows[a], rows[b]);
    subsample(pos, max_pairs_per_group, root.split("pos/" + gname));

    std::vector<std::size_t> rows_flat;
    std::vector<int> ids_flat;
    for (const auto& [id, rows] : ids)
      for (std::size_t r : rows) {
        rows_flat.push_back(r);
        ids_flat.push_back(id);
      }
    std::size_t neg_total = 0;
    for (std::size_t a = 0; a < rows_flat.size(); ++a)
      for (std::size_t b = a + 1; b < rows_flat.size(); ++b)
        if (ids_flat[a] != ids_flat[b]) ++neg_total;

    std::vector<RowPair> neg;
    if (neg_total <= 2 * max_pairs_per_group) {
      for (std::size_t a = 0; a < rows_flat.size(); ++a)
        for (std::size_t b = a + 1; b < rows_flat.size(); ++b)
          if (ids_flat[a] != ids_flat[b]) neg.emplace_back(rows_flat[a], rows_flat[b]);
      subsample(neg, max_pairs_per_group, root.split("neg/" + gname));
    } else {
      // Sparse regime: rejection-sample distinct cross-identity pairs.
      Rng nrng = root.split("neg/" + gname);
      std::set<RowPair> seen;
      while (neg.size() < max_pairs_per_group) {
        std::size_t a = nrng.next_u64() % rows_flat.size();
        std::size_t b = nrng.next_u64() % rows_flat.size();
        if (a == b || ids_flat[a] == ids_flat[b]) continue;
        if (a > b) std::swap(a, b);
        if (!seen.insert({rows_flat[a], rows_flat[b]}).second) continue;
        neg.emplace_back(rows_flat[a], rows_flat[b]);
      }
    }

    for (const auto& [a, b] : pos)
      out.positives.push_back({dot(embeddings.row(a), embeddings.row(b)), gname});
    for (const auto& [a, b] : neg)
      out.negatives.push_back({dot(embeddings.row(a), embeddings.row(b)), gname});
    out.group_set.push_back(gname);
  }
  return out;
}

FairnessReport build_report(const GroupedScores& scores, const std::vector<double>& gammas,
                            std::size_t roc_points) {
  if (scores.group_set.empty()) throw IncompatibleError("build_report: no usable groups");
  if (gammas.empty()) throw std::invalid_argument("build_report: no gammas requested");

  FairnessReport rep;
  rep.groups = scores.group_set;
  rep.warnings = scores.warnings;

  std::vector<double> accs;
  for (const auto& g : rep.groups) {
    const auto acc = verification_accuracy(scores, g);
    rep.group_accuracy[g] = acc.accuracy;
    rep.group_accuracy_threshold[g] = acc.best_threshold;
    accs.push_back(acc.accuracy);
    rep.roc_curves[g] = roc(scores, g, roc_points);
  }
  rep.accuracy_avg = 0.0;
  for (double a : accs) rep.accuracy_avg += a;
  rep.accuracy_avg /= static_cast<double>(accs.size());
  rep.accuracy_std = population_std(accs);

  for (double gamma : gammas) {
    OperatingPoint op;
    op.gamma = gamma;
    op.threshold = threshold_for_overall_fpr(scores, gamma);
    op.overall_fpr = fpr_at(scores, op.threshold);
    op.overall_fnr = fnr_at(scores, op.threshold);
    std::vector<double> rates;
    for (const auto& g : rep.groups) {
      op.group_fpr[g] = fpr_at(scores, op.threshold, g);
      op.group_fnr[g] = fnr_at(scores, op.threshold, g);
      rates.push_back(op.group_fpr[g]);
    }
    op.fpr_std = population_std(rates);
    op.bias_degree = bias_degree_from_rates(rates, op.overall_fpr);
    rep.levels.push_back(std::move(op));
  }
  return rep;
}

std::string report_to_json_string(const FairnessReport& rep) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "fairfpr-report";
  j["groups"] = rep.groups;

  json per_group = json::object();
  const OperatingPoint& primary = rep.levels.front();
  for (const auto& g : rep.groups) {
    per_group[g] = {{"fpr", primary.group_fpr.at(g)},
                    {"fnr", primary.group_fnr.at(g)},
                    {"accuracy", rep.group_accuracy.at(g)}};
  }
  j["per_group"] = per_group;  // at the first requested FPR level
  j["overall_fpr"] = primary.overall_fpr;
  j["overall_fnr"] = primary.overall_fnr;
  j["accuracy"] = {{"avg", rep.accuracy_avg}, {"std", rep.accuracy_std}};
  for (const auto& g : rep.groups) {
    j["accuracy"]["per_group"][g] = rep.group_accuracy.at(g);
    j["accuracy"]["best_threshold"][g] = rep.group_accuracy_threshold.at(g);
  }

  j["levels"] = json::array();
  for (const auto& op : rep.levels) {
    json lv = {{"gamma", op.gamma},
               {"threshold", op.threshold},
               {"overall_fpr", op.overall_fpr},
               {"overall_fnr", op.overall_fnr},
               {"fpr_std", op.fpr_std},
               {"fpr_std_percent", op.fpr_std * 100.0},
               {"bias_degree", op.bias_degree}};
    for (const auto& g : rep.groups) {
      lv["group_fpr"][g] = op.group_fpr.at(g);
      lv["group_fnr"][g] = op.group_fnr.at(g);
    }
    j["levels"].push_back(lv);
  }
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

void write_report_files(const FairnessReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/report.json", report_to_json_string(rep));
  for (const auto& [g, curve] : rep.roc_curves) {
    std::ostringstream csv;
    csv << "threshold,fpr,tpr\n";
    for (const auto& pt : curve)
      csv << format_g17(pt.threshold) << "," << format_g17(pt.fpr) << "," << format_g17(pt.tpr)
          << "\n";
    write_text_file(dir + "/roc-" + g + ".csv", csv.str());
  }
}

}  // namespace fairfpr
