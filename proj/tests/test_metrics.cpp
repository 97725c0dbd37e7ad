#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fairfpr/error.hpp"
#include "fairfpr/losses.hpp"
#include "fairfpr/metrics.hpp"
#include "fairfpr/rng.hpp"
#include "support/finite_diff.hpp"
#include "support/oracles.hpp"

using namespace fairfpr;
using namespace fairfpr::testing;

namespace {

GroupedScores random_scores(Rng& rng, std::size_t groups, std::size_t pos_per_group,
                            std::size_t neg_per_group) {
  GroupedScores s;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::string name(1, char('a' + g));
    s.group_set.push_back(name);
    for (std::size_t i = 0; i < pos_per_group; ++i)
      s.positives.push_back({0.2 + 0.8 * rng.next_unit() - 0.2 * rng.next_unit(), name});
    for (std::size_t i = 0; i < neg_per_group; ++i)
      s.negatives.push_back({-0.3 + 0.9 * rng.next_unit(), name});
  }
  return s;
}

}  // namespace

TEST_CASE("fpr_at / fnr_at: counts and bounds") {
  GroupedScores s;
  s.group_set = {"a"};
  for (double v : {0.4, 0.2, 0.35}) s.negatives.push_back({v, "a"});
  for (double v : {0.9, 0.5}) s.positives.push_back({v, "a"});
  CHECK(fpr_at(s, 0.31) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(fpr_at(s, 1.0) == 0.0);
  CHECK(fnr_at(s, 0.7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fnr_at(s, -1.0) == 0.0);
  CHECK_THROWS_AS(fpr_at(s, 0.1, std::string("zzz")), std::invalid_argument);
}

TEST_CASE("fpr_at / fnr_at: brute-force agreement and monotonicity") {
  Rng rng(71);
  GroupedScores s = random_scores(rng, 3, 40, 60);
  double prev_fpr = 1.0, prev_fnr = 0.0;
  for (double t = -0.5; t <= 1.0; t += 0.05) {
    const double fp = fpr_at(s, t);
    const double fn = fnr_at(s, t);
    CHECK(fp == brute_fpr(s, t));
    CHECK(fn == brute_fnr(s, t));
    CHECK(fp <= prev_fpr);
    CHECK(fn >= prev_fnr);
    prev_fpr = fp;
    prev_fnr = fn;
    for (const auto& g : s.group_set) {
      CHECK(fpr_at(s, t, g) == brute_fpr(s, t, g));
      CHECK(fnr_at(s, t, g) == brute_fnr(s, t, g));
    }
  }
}

TEST_CASE("overall FPR is the pair-count-weighted mean of group FPRs") {
  Rng rng(73);
  GroupedScores s = random_scores(rng, 4, 10, 35);
  s.negatives.resize(s.negatives.size() - 7);  // uneven group sizes
  for (double t : {-0.2, 0.1, 0.33}) {
    double weighted = 0.0;
    for (const auto& g : s.group_set) {
      double count = 0;
      for (const auto& p : s.negatives)
        if (p.group == g) ++count;
      weighted += fpr_at(s, t, g) * count;
    }
    CHECK(std::abs(fpr_at(s, t) - weighted / double(s.negatives.size())) < 1e-12);
  }
}

TEST_CASE("threshold_for_overall_fpr: order statistic and boundary") {
  GroupedScores s;
  s.group_set = {"a"};
  for (int i = 0; i < 10; ++i) s.negatives.push_back({0.05 * i, "a"});  // distinct
  // gamma 0.2 -> k = 2 -> second largest
  CHECK(threshold_for_overall_fpr(s, 0.2) == doctest::Approx(0.40).epsilon(1e-15));
  CHECK(fpr_at(s, threshold_for_overall_fpr(s, 0.2)) <= 0.2);
  // large gamma -> the pool minimum
  CHECK(threshold_for_overall_fpr(s, 0.95) == doctest::Approx(0.0).epsilon(1e-15));

  Rng rng(79);
  for (int rep = 0; rep < 20; ++rep) {
    GroupedScores r = random_scores(rng, 2, 5, 80);
    const double gamma = 0.001 + 0.3 * rng.next_unit();
    const double t = threshold_for_overall_fpr(r, gamma);
    CHECK(fpr_at(r, t) <= gamma);
    // smallest observed score achieving the bound under the k-th-largest rule
    std::vector<double> neg;
    for (const auto& p : r.negatives) neg.push_back(p.similarity);
    const auto k = static_cast<std::size_t>(
        std::clamp(std::ceil(gamma * double(neg.size())), 1.0, double(neg.size())));
    CHECK(t == sorted_kth_largest(neg, k));
  }
}

TEST_CASE("bias_degree: zero deviation, hand example, symmetry") {
  CHECK(bias_degree_from_rates({0.03, 0.03, 0.03}, 0.03) == 0.0);

  // group FPRs {0.02, 0} at realized overall FPR 0.01
  CHECK(bias_degree_from_rates({0.02, 0.0}, 0.01) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(bias_degree_from_rates({0.0, 0.02}, 0.01) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(bias_degree_from_rates({0.1}, 0.1), IncompatibleError);
  CHECK_THROWS_AS(bias_degree_from_rates({0.1, 0.2}, 0.0), std::runtime_error);
}

TEST_CASE("bias_degree: constructed scores hit the printed example") {
  // 100 negatives per group; gamma such that k=3 -> 2 false positives, both
  // in group a: fpr_a = 0.02, fpr_b = 0, overall = 0.01.
  GroupedScores s;
  s.group_set = {"a", "b"};
  Rng rng(83);
  for (int i = 0; i < 100; ++i) {
    s.negatives.push_back({i < 2 ? 0.8 + 0.01 * i : 0.3 * rng.next_unit(), "a"});
    s.negatives.push_back({0.3 * rng.next_unit(), "b"});
    s.positives.push_back({0.9, i % 2 ? "a" : "b"});
  }
  const double t = threshold_for_overall_fpr(s, 0.015);
  CHECK(fpr_at(s, t, std::string("a")) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(fpr_at(s, t, std::string("b")) == 0.0);
  CHECK(fpr_at(s, t) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(bias_degree(s, 0.015) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("bias_degree: matches a straight-line re-evaluation on random scores") {
  Rng rng(89);
  for (int rep = 0; rep < 15; ++rep) {
    GroupedScores s = random_scores(rng, 3, 10, 70);
    const double gamma = 0.05 + 0.2 * rng.next_unit();
    // independent evaluation: sort-based threshold, then the printed formula
    std::vector<double> neg;
    for (const auto& p : s.negatives) neg.push_back(p.similarity);
    const auto k = static_cast<std::size_t>(
        std::clamp(std::ceil(gamma * double(neg.size())), 1.0, double(neg.size())));
    const double t = sorted_kth_largest(neg, k);
    std::vector<double> rates;
    for (const auto& g : s.group_set) rates.push_back(brute_fpr(s, t, g));
    double mu = 0.0;
    for (double r : rates) mu += r;
    mu /= double(rates.size());
    double acc = 0.0;
    const double overall = brute_fpr(s, t);
    for (double r : rates) acc += ((r - mu) / overall) * ((r - mu) / overall);
    const double want = std::sqrt(acc) / double(rates.size());
    CHECK(bias_degree(s, gamma) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("bias_degree is invariant under group relabeling") {
  Rng rng(97);
  GroupedScores s = random_scores(rng, 3, 10, 50);
  GroupedScores permuted = s;
  auto rename = [](std::string& g) {
    if (g == "a") g = "c";
    else if (g == "b") g = "a";
    else g = "b";
  };
  for (auto& p : permuted.positives) rename(p.group);
  for (auto& p : permuted.negatives) rename(p.group);
  CHECK(bias_degree(permuted, 0.1) == doctest::Approx(bias_degree(s, 0.1)).epsilon(1e-15));
}

TEST_CASE("roc: exact endpoints, monotone fpr, brute-force points") {
  Rng rng(101);
  GroupedScores s = random_scores(rng, 2, 30, 50);
  const auto curve = roc(s, std::nullopt, 16);
  REQUIRE(curve.size() == 16);
  CHECK(curve.front().fpr == 1.0);
  CHECK(curve.front().tpr == 1.0);
  CHECK(curve.back().fpr == 0.0);
  CHECK(curve.back().tpr == 0.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].threshold >= curve[i - 1].threshold);
    CHECK(curve[i].fpr <= curve[i - 1].fpr);
  }
  for (const auto& pt : curve) {
    CHECK(pt.fpr == brute_fpr(s, pt.threshold));
    CHECK(pt.tpr == doctest::Approx(1.0 - brute_fnr(s, pt.threshold)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(roc(s, std::nullopt, 1), std::invalid_argument);
}

TEST_CASE("verification_accuracy: separable, indistinguishable, oracle") {
  GroupedScores sep;
  sep.group_set = {"a"};
  for (double v : {0.8, 0.9, 0.85}) sep.positives.push_back({v, "a"});
  for (double v : {0.1, 0.2, 0.15}) sep.negatives.push_back({v, "a"});
  CHECK(verification_accuracy(sep).accuracy == 1.0);

  GroupedScores same;
  same.group_set = {"a"};
  for (double v : {0.1, 0.4, 0.7}) {
    same.positives.push_back({v, "a"});
    same.negatives.push_back({v, "a"});
  }
  // best split leaves one side fully correct plus ties: 4/6
  CHECK(verification_accuracy(same).accuracy == doctest::Approx(4.0 / 6.0));

  Rng rng(103);
  for (int rep = 0; rep < 10; ++rep) {
    GroupedScores s = random_scores(rng, 2, 25, 25);
    const auto got = verification_accuracy(s);
    const auto want = brute_accuracy(s);
    CHECK(got.accuracy == want.accuracy);
    CHECK(got.best_threshold == want.best_threshold);
    for (const auto& g : s.group_set) {
      const auto gg = verification_accuracy(s, g);
      const auto gw = brute_accuracy(s, g);
      CHECK(gg.accuracy == gw.accuracy);
      CHECK(gg.best_threshold == gw.best_threshold);
    }
  }
}

TEST_CASE("build_pairs: tiny enumeration and caps") {
  Rng rng(107);
  // 1 group, 2 identities x 2 samples
  const Matrix emb = random_unit_rows(rng, 4, 6);
  const std::vector<int> ids = {0, 0, 1, 1};
  const std::vector<std::string> groups(4, "a");
  const GroupedScores all = build_pairs(emb, ids, groups, 100, 5);
  CHECK(all.positives.size() == 2);
  CHECK(all.negatives.size() == 4);

  const GroupedScores capped = build_pairs(emb, ids, groups, 2, 5);
  CHECK(capped.positives.size() == 2);
  CHECK(capped.negatives.size() == 2);

  // identical embeddings in a positive pair score exactly 1
  Matrix same = emb;
  std::copy(same.row(0).begin(), same.row(0).end(), same.row(1).begin());
  const GroupedScores dup = build_pairs(same, ids, groups, 100, 5);
  bool found_unit = false;
  for (const auto& p : dup.positives) found_unit |= p.similarity == doctest::Approx(1.0);
  CHECK(found_unit);
}

TEST_CASE("build_pairs: sampled pairs are a subset of the exhaustive set") {
  Rng rng(109);
  const std::size_t n = 24;
  const Matrix emb = random_unit_rows(rng, n, 8);
  std::vector<int> ids(n);
  std::vector<std::string> groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = int(i / 3);          // 8 identities x 3 samples
    groups[i] = i < 12 ? "a" : "b";
  }
  const GroupedScores sampled = build_pairs(emb, ids, groups, 5, 77);
  CHECK(sampled.positives.size() == 10);  // capped at 5 per group
  CHECK(sampled.negatives.size() == 10);

  // exhaustive similarity sets per group
  std::set<std::pair<std::string, double>> pos_all, neg_all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (groups[i] != groups[j]) continue;
      const double sim = dot(emb.row(i), emb.row(j));
      (ids[i] == ids[j] ? pos_all : neg_all).insert({groups[i], sim});
    }
  for (const auto& p : sampled.positives) CHECK(pos_all.count({p.group, p.similarity}) == 1);
  for (const auto& p : sampled.negatives) CHECK(neg_all.count({p.group, p.similarity}) == 1);

  CHECK(build_pairs(emb, ids, groups, 5, 77).positives == sampled.positives);  // deterministic
}

TEST_CASE("build_pairs: single-identity group excluded with a warning") {
  Rng rng(113);
  const Matrix emb = random_unit_rows(rng, 6, 4);
  const std::vector<int> ids = {0, 0, 1, 1, 2, 2};
  const std::vector<std::string> groups = {"a", "a", "a", "a", "solo", "solo"};
  const GroupedScores s = build_pairs(emb, ids, groups, 10, 3);
  CHECK(s.group_set == std::vector<std::string>{"a"});
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("solo") != std::string::npos);
  for (const auto& p : s.negatives) CHECK(p.group == "a");
}

TEST_CASE("group degeneration: per-probe groups reproduce instance FPR") {
  Rng rng(127);
  const LogitsBatch b = random_cosine_batch(rng, 6, 10);
  const ThresholdEstimate thr = margin_threshold(b);
  const PenaltyState st = instance_fpr(b, thr, 2.0);

  GroupedScores s;
  for (std::size_t i = 0; i < b.batch_size(); ++i) {
    const std::string g = "probe-" + std::to_string(i);
    s.group_set.push_back(g);
    for (std::size_t j = 0; j < b.class_count(); ++j)
      if (j != std::size_t(b.labels[i])) s.negatives.push_back({b.cosines(i, j), g});
  }
  for (std::size_t i = 0; i < b.batch_size(); ++i)
    CHECK(fpr_at(s, thr.t_u, "probe-" + std::to_string(i)) == st.instance_fpr[i]);
}

TEST_CASE("build_report: structure and serialization") {
  Rng rng(131);
  GroupedScores s = random_scores(rng, 3, 30, 60);
  const FairnessReport rep = build_report(s, {0.1, 0.2}, 8);
  CHECK(rep.groups.size() == 3);
  CHECK(rep.levels.size() == 2);
  CHECK(rep.levels[0].gamma == 0.1);
  CHECK(rep.roc_curves.size() == 3);
  CHECK(rep.accuracy_avg > 0.0);

  const std::string json_text = report_to_json_string(rep);
  CHECK(json_text.find("\"bias_degree\"") != std::string::npos);
  CHECK(json_text.find("\"per_group\"") != std::string::npos);
}
