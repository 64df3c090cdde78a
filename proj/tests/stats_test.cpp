#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "learnseq/stats.hpp"

using namespace learnseq;

namespace {

// Two-sided Student-t tail by Simpson quadrature of the density on [0, |t|].
double t_tail_by_quadrature(double t, double df) {
  const double c = std::tgamma((df + 1) / 2) / (std::sqrt(df * M_PI) * std::tgamma(df / 2));
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double a = 0, b = std::abs(t), h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4 : 2);
  return 1 - 2 * s * h / 3;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) s += x = rng.uniform() + 1e-6;
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST(Entropy, Values) {
  EXPECT_EQ(shannon_entropy({1.0}), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy({0.5, 0.5}), 1.0);
  EXPECT_NEAR(shannon_entropy({0.75, 0.25}), 0.811278, 1e-6);
  EXPECT_NEAR(shannon_entropy({0.5, 0.5}, LogBase::natural), std::log(2.0), 1e-15);
}

TEST(JsDivergence, Values) {
  EXPECT_EQ(js_divergence({0.3, 0.7}, {0.3, 0.7}), 0.0);
  EXPECT_NEAR(js_divergence({1, 0}, {0.5, 0.5}), 0.311278, 1e-6);
  EXPECT_NEAR(js_divergence({1, 0}, {0, 1}), 1.0, 1e-15);
  const double e = 1e-4;
  EXPECT_NEAR(js_divergence({1 - e, e}, {e, 1 - e}), 1.0, 0.01);
  EXPECT_THROW(js_divergence({1.0}, {0.5, 0.5}), ValidationError);
}

TEST(JsDivergence, SymmetricBoundedAndZeroOnlyOnEquality) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(1, 20));
    auto p = random_distribution(rng, n), q = random_distribution(rng, n);
    const double pq = js_divergence(p, q), qp = js_divergence(q, p);
    EXPECT_LE(std::abs(pq - qp), 1e-12);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0);
    EXPECT_NEAR(js_divergence(p, p), 0.0, 1e-12);
    if (n > 1) {
      EXPECT_GT(pq, 0.0);
    }
  }
}

TEST(CosineDistance, Values) {
  EXPECT_NEAR(cosine_distance({1, 2, 3}, {1, 2, 3}), 0.0, 1e-15);
  EXPECT_NEAR(cosine_distance({1, 0}, {0, 1}), 1.0, 1e-15);
  EXPECT_NEAR(cosine_distance({1, 1}, {1, 0}), 0.292893, 1e-6);
  EXPECT_NEAR(cosine_distance({1, 2, 3}, {3, 6, 9}), 0.0, 1e-15);
  EXPECT_THROW(cosine_distance({0, 0}, {1, 0}), ValidationError);
  EXPECT_THROW(cosine_distance({1}, {1, 0}), ValidationError);
}

TEST(PairedTTest, HandValue) {
  auto r = paired_t_test({2, 4, 6}, {1, 2, 3});
  EXPECT_NEAR(r.t, 3.4641016, 1e-6);
  EXPECT_EQ(r.df, 2u);
  // scipy.stats.ttest_rel gives p = 0.07417990022744853
  EXPECT_NEAR(r.p, 0.0741799, 1e-6);
  EXPECT_NEAR(r.p, t_tail_by_quadrature(r.t, 2), 1e-9);
}

TEST(PairedTTest, DegenerateDifferences) {
  auto same = paired_t_test({1, 2, 3}, {1, 2, 3});
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  auto shifted = paired_t_test({1, 2, 3}, {2, 3, 4});
  EXPECT_TRUE(std::isinf(shifted.t));
  EXPECT_LT(shifted.t, 0);
  EXPECT_EQ(shifted.p, 0.0);
  EXPECT_THROW(paired_t_test({1}, {2}), ValidationError);
  EXPECT_THROW(paired_t_test({1, 2}, {2}), ValidationError);
}

TEST(PairedTTest, SignConventionAndQuadrature) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(3, 40));
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = rng.normal();
      ys[k] = rng.normal() + 0.5;
    }
    auto r = paired_t_test(xs, ys);
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) mx += xs[k], my += ys[k];
    EXPECT_EQ(r.t < 0, mx < my);
    EXPECT_NEAR(r.p, t_tail_by_quadrature(r.t, static_cast<double>(n - 1)), 1e-7);
  }
}

TEST(SplitHalves, SizesAndDeterminism) {
  auto [a2, b2] = split_halves(std::vector<int>{1, 2}, 0, "u");
  EXPECT_EQ(a2.size(), 1u);
  EXPECT_EQ(b2.size(), 1u);
  const std::vector<int> five{1, 2, 3, 4, 5};
  auto [a5, b5] = split_halves(five, 9, "u");
  EXPECT_EQ(a5.size(), 3u);
  EXPECT_EQ(b5.size(), 2u);
  auto again = split_halves(five, 9, "u");
  EXPECT_EQ(again.first, a5);
  EXPECT_EQ(again.second, b5);
  EXPECT_THROW(split_halves(std::vector<int>{1}, 0, "u"), ValidationError);
}

TEST(SplitHalves, StreamsDifferByUser) {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  EXPECT_NE(split_halves(v, 1, "alice").first, split_halves(v, 1, "bob").first);
}

namespace {

std::map<std::string, std::vector<LabeledSequence>> cohort(const std::vector<std::string>& per_user_label,
                                                           int copies) {
  std::map<std::string, std::vector<LabeledSequence>> out;
  for (std::size_t u = 0; u < per_user_label.size(); ++u) {
    const auto id = "u" + std::to_string(u);
    for (int c = 0; c < copies; ++c)
      out[id].push_back({id, "s" + std::to_string(c), "t", parse_labels(per_user_label[u]), {}, {}});
  }
  return out;
}

}  // namespace

TEST(Stability, IdenticalBehaviorGivesNoSignal) {
  const PatternVocabulary vocab{parse_labels("ex P"), parse_labels("P p")};
  auto rep = stability_experiment(cohort({"ex P p", "ex P p", "ex P p", "ex P p"}, 4), vocab, {});
  for (const auto& s : rep.summaries) {
    EXPECT_NEAR(s.self_distance, s.distance_to_other, 1e-12);
    EXPECT_EQ(s.test.p, 1.0);
  }
}

TEST(Stability, DistinctBehaviorIsIdentifiable) {
  const PatternVocabulary vocab{parse_labels("ex P"), parse_labels("P p"), parse_labels("AnEx f"),
                                parse_labels("f Ex"), parse_labels("anex anex")};
  auto per_user = cohort({"ex P p", "AnEx f Ex", "anex anex anex", "ex P ex P", "AnEx f AnEx f"}, 6);
  // A little noise so the differences are not constant.
  per_user["u0"].push_back({"u0", "x", "t", parse_labels("AnEx f"), {}, {}});
  per_user["u2"].push_back({"u2", "x", "t", parse_labels("ex P"), {}, {}});
  StabilityOptions opt;
  opt.seed = 3;
  auto rep = stability_experiment(per_user, vocab, opt);
  ASSERT_EQ(rep.summaries.size(), 2u);
  for (const auto& s : rep.summaries) {
    EXPECT_LT(s.self_distance, s.distance_to_other);
    EXPECT_LT(s.test.t, 0);
    EXPECT_EQ(s.test.df, 4u);
  }
}

TEST(Stability, ExclusionAndErrors) {
  const PatternVocabulary vocab{parse_labels("ex P")};
  auto per_user = cohort({"ex P", "ex P", "ex P"}, 2);
  per_user["solo"].push_back({"solo", "s", "t", parse_labels("ex P"), {}, {}});
  auto rep = stability_experiment(per_user, vocab, {});
  EXPECT_EQ(rep.excluded, std::vector<std::string>{"solo"});
  EXPECT_EQ(rep.users.size(), 3u);

  EXPECT_THROW(stability_experiment(cohort({"ex P"}, 3), vocab, {}), ValidationError);
}

TEST(Stability, DeterministicGivenSeed) {
  const PatternVocabulary vocab{parse_labels("ex P"), parse_labels("P p")};
  auto per_user = cohort({"ex P p", "ex P ex", "P p P", "ex ex P"}, 5);
  for (auto& [u, seqs] : per_user) seqs.push_back({u, "z", "t", parse_labels("P p p"), {}, {}});
  StabilityOptions opt;
  opt.seed = 42;
  std::ostringstream a, b;
  write_stability_csv(a, stability_experiment(per_user, vocab, opt));
  write_stability_csv(b, stability_experiment(per_user, vocab, opt));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Stability, SummaryJsonColumns) {
  StabilityReport rep;
  rep.measures = {Measure::js_divergence};
  rep.summaries.push_back({Measure::js_divergence, 0.37, 0.514, {-7.84, 43, 1e-9}});
  const auto j = stability_summary_json(rep);
  const auto& row = j["measures"][0];
  EXPECT_EQ(row["measure"], "js_divergence");
  EXPECT_EQ(row["self_distance"], 0.37);
  EXPECT_EQ(row["distance_to_other"], 0.514);
  EXPECT_EQ(row["t"], -7.84);
  EXPECT_EQ(row["p"], 1e-9);
}
