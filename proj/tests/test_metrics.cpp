#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "rescnn/errors.hpp"
#include "rescnn/metrics.hpp"
#include "rescnn/rng.hpp"

using namespace rescnn;

namespace {

std::vector<int> random_labels(std::size_t n, Rng& rng, int classes = 5) {
  std::vector<int> out(n);
  for (auto& x : out) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  return out;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Confusion, MatchesPairHistogram) {
  Rng rng(1);
  const auto t = random_labels(500, rng), p = random_labels(500, rng);
  const auto cm = confusion(t, p);
  std::size_t hist[5][5] = {};
  for (std::size_t i = 0; i < t.size(); ++i) ++hist[t[i]][p[i]];
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) EXPECT_EQ(cm(a, b), hist[a][b]);
  EXPECT_EQ(cm.total(), 500u);
  EXPECT_THROW(confusion({0, 1}, {0}), DimensionError);
  EXPECT_THROW(confusion({0, 5}, {0, 1}), IndexError);
}

TEST(Confusion, AccumulatesAcrossBatches) {
  Rng rng(2);
  const auto t = random_labels(100, rng), p = random_labels(100, rng);
  ConfusionMatrix sum;
  sum += confusion({t.begin(), t.begin() + 40}, {p.begin(), p.begin() + 40});
  sum += confusion({t.begin() + 40, t.end()}, {p.begin() + 40, p.end()});
  EXPECT_EQ(sum, confusion(t, p));
}

TEST(Scores, HandComputedTwoClassCase) {
  const auto r = precision_recall_f1(confusion({0, 0, 1}, {0, 1, 1}, 2));
  EXPECT_DOUBLE_EQ(r.classes[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.classes[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.classes[0].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.classes[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.classes[1].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3.0);
  EXPECT_EQ(r.classes[1].name, "Class 1");
}

TEST(Scores, MicroAveragedF1EqualsAccuracy) {
  Rng rng(3);
  const auto t = random_labels(300, rng), p = random_labels(300, rng);
  const auto cm = confusion(t, p);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    tp += cm(c, c);
    fp += cm.col_sum(c) - cm(c, c);
    fn += cm.row_sum(c) - cm(c, c);
  }
  const double micro_p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double micro_r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  EXPECT_NEAR(2 * micro_p * micro_r / (micro_p + micro_r), precision_recall_f1(cm).accuracy, 1e-15);
}

TEST(Scores, PermutingClassesPermutesRows) {
  Rng rng(4);
  const auto t = random_labels(200, rng), p = random_labels(200, rng);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<int> tp(t.size()), pp(p.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    tp[i] = perm[t[i]];
    pp[i] = perm[p[i]];
  }
  const auto a = precision_recall_f1(confusion(t, p)), b = precision_recall_f1(confusion(tp, pp));
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_DOUBLE_EQ(a.classes[c].f1, b.classes[perm[c]].f1);
    EXPECT_EQ(a.classes[c].support, b.classes[perm[c]].support);
  }
  EXPECT_NEAR(a.macro.f1, b.macro.f1, 1e-15);
  EXPECT_NEAR(a.weighted.f1, b.weighted.f1, 1e-15);
}

TEST(Scores, BalancedSupportMakesMacroEqualWeighted) {
  std::vector<int> t, p;
  Rng rng(5);
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 40; ++i) {
      t.push_back(c);
      p.push_back(rng.uniform() < 0.7 ? c : static_cast<int>(rng.below(5)));
    }
  const auto r = precision_recall_f1(confusion(t, p));
  EXPECT_NEAR(r.macro.f1, r.weighted.f1, 1e-12);
  EXPECT_NEAR(r.macro.recall, r.weighted.recall, 1e-12);
}

TEST(Scores, ZeroDenominatorsAreFlaggedAndAbsentClassesSkipped) {
  // Class 2 is never predicted; classes 3 and 4 never appear.
  const auto r = precision_recall_f1(confusion({0, 1, 2, 2}, {0, 1, 0, 1}));
  EXPECT_TRUE(r.classes[2].precision_undefined);
  EXPECT_FALSE(r.classes[2].recall_undefined);
  EXPECT_EQ(r.classes[2].precision, 0.0);
  EXPECT_EQ(r.absent, (std::vector<std::size_t>{3, 4}));
  const double macro = (r.classes[0].f1 + r.classes[1].f1 + r.classes[2].f1) / 3;
  EXPECT_DOUBLE_EQ(r.macro.f1, macro);
  const std::string table = render_report(r, ReportFormat::kTable);
  EXPECT_NE(table.find('*'), std::string::npos);
}

TEST(Render, JsonRoundTrip) {
  Rng rng(6);
  const auto t = random_labels(120, rng), p = random_labels(120, rng);
  const auto r = precision_recall_f1(confusion(t, p), {"age", "ethnicity", "gender", "religion", "other"});
  const std::string json = render_report(r, ReportFormat::kJson);
  const auto back = report_from_json(json);
  EXPECT_EQ(render_report(back, ReportFormat::kJson), json);
  EXPECT_EQ(back.classes[3].name, "religion");
  EXPECT_EQ(back.macro.f1, r.macro.f1);
}

TEST(Render, CsvHasHeaderClassRowsAndTwoAverages) {
  const auto r = precision_recall_f1(confusion({0, 1, 2, 3, 4, 0}, {0, 1, 2, 3, 4, 1}));
  const std::string csv = render_report(r, ReportFormat::kCsv);
  EXPECT_EQ(count_lines(csv), 8u);
  EXPECT_EQ(csv.rfind("row,name,precision,recall,f1,support\n", 0), 0u);
  EXPECT_NE(csv.find("\nmacro,"), std::string::npos);
  EXPECT_NE(csv.find("\nweighted,"), std::string::npos);
}

TEST(Render, TableUsesRequestedDecimals) {
  const auto r = precision_recall_f1(confusion({0, 0, 1}, {0, 1, 1}, 2), {"age", "gender"});
  const std::string one = render_report(r, ReportFormat::kTable);
  EXPECT_NE(one.find("66.7"), std::string::npos);
  EXPECT_NE(one.find("Class 0 (age)"), std::string::npos);
  EXPECT_NE(one.find("macro avg"), std::string::npos);
  EXPECT_NE(one.find("weighted avg"), std::string::npos);
  const std::string zero = render_report(r, ReportFormat::kTable, {0});
  EXPECT_NE(zero.find("67"), std::string::npos);
  EXPECT_EQ(zero.find("66.7"), std::string::npos);
  EXPECT_THROW(parse_report_format("xml"), ConfigError);
}

TEST(Scores, SampleOrderDoesNotMatter) {
  Rng rng(7);
  auto t = random_labels(150, rng), p = random_labels(150, rng);
  const auto before = precision_recall_f1(confusion(t, p));
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::vector<int> ts, ps;
  for (auto i : order) {
    ts.push_back(t[i]);
    ps.push_back(p[i]);
  }
  EXPECT_EQ(render_report(precision_recall_f1(confusion(ts, ps)), ReportFormat::kJson),
            render_report(before, ReportFormat::kJson));
}

TEST(Scores, PerfectPredictionsScoreOneEverywhere) {
  const std::vector<int> t{0, 1, 2, 3, 4, 4, 3, 2};
  const auto r = precision_recall_f1(confusion(t, t));
  for (const auto& c : r.classes) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_EQ(r.macro.f1, 1.0);
  EXPECT_EQ(r.weighted.f1, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_NE(render_report(r, ReportFormat::kTable).find("100.0"), std::string::npos);
}
