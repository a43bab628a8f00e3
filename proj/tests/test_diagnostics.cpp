#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "dmprior/diagnostics.hpp"
#include "dmprior/report_io.hpp"
#include "dmprior/rng.hpp"

using namespace dmprior;

namespace {

struct HandCase {
  std::string id;
  Label truth;
  std::vector<double> samples;
};

std::vector<HandCase> hand_cases() {
  const CsvTable t = read_csv(std::string(DMPRIOR_FIXTURES) + "/hand_cases.csv");
  std::vector<HandCase> out;
  for (const auto& row : t.rows) {
    HandCase c{row[0], row[1] == "1" ? Label::positive : Label::negative, {}};
    std::string_view rest = row[2];
    while (!rest.empty()) {
      const auto cut = rest.find(';');
      c.samples.push_back(*parse_double(rest.substr(0, cut)));
      rest = cut == std::string_view::npos ? std::string_view{} : rest.substr(cut + 1);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CaseSummary> hand_summaries() {
  std::vector<CaseSummary> out;
  for (const auto& c : hand_cases()) out.push_back(summarize_case(c.samples, c.truth, c.id));
  return out;
}

nlohmann::json golden() {
  return nlohmann::json::parse(read_file(std::string(DMPRIOR_FIXTURES) + "/hand_report.json"));
}

CaseSummary with(double mean, Label truth, double lo = 0.0, double hi = 0.0, double above = 0.0) {
  CaseSummary s;
  s.mean = s.median = s.mode = mean;
  s.truth = truth;
  s.ci_low = lo;
  s.ci_high = hi;
  s.above_mass = above;
  return s;
}

}  // namespace

TEST(SummarizeCase, ConstantSamples) {
  const auto s = summarize_case(std::vector<double>(100, 0.2), Label::negative);
  EXPECT_DOUBLE_EQ(s.mean, 0.2);
  EXPECT_DOUBLE_EQ(s.median, 0.2);
  EXPECT_DOUBLE_EQ(s.mode, 0.2);
  EXPECT_DOUBLE_EQ(s.ci_low, 0.2);
  EXPECT_DOUBLE_EQ(s.ci_high, 0.2);
}

TEST(SummarizeCase, SymmetricTwoPoint) {
  std::vector<double> v(50, 0.1);
  v.insert(v.end(), 50, 0.9);
  const auto s = summarize_case(v, Label::positive);
  EXPECT_NEAR(s.mean, 0.5, 1e-15);
  EXPECT_EQ(s.above_mass, 0.5);
  EXPECT_THROW(summarize_case(std::vector<double>{0.3}, Label::positive), Error);
}

TEST(SummarizeCase, HandFixtureMatchesGolden) {
  const auto summaries = hand_summaries();
  const auto g = golden()["summaries"];
  ASSERT_EQ(summaries.size(), g.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    SCOPED_TRACE(s.case_id);
    EXPECT_EQ(s.mean, g[i]["mean"].get<double>());
    EXPECT_EQ(s.median, g[i]["median"].get<double>());
    EXPECT_EQ(s.mode, g[i]["mode"].get<double>());
    EXPECT_EQ(s.ci_low, g[i]["ci_low"].get<double>());
    EXPECT_EQ(s.ci_high, g[i]["ci_high"].get<double>());
    EXPECT_EQ(s.above_mass, g[i]["above_mass"].get<double>());
    EXPECT_NEAR(s.entropy, g[i]["entropy"].get<double>(), 1e-15);
    EXPECT_LE(s.ci_low, s.median);
    EXPECT_LE(s.median, s.ci_high);
  }
}

TEST(Diagnose, HandFixtureMatchesGolden) {
  const auto r = diagnose(hand_summaries());
  const auto g = golden();
  EXPECT_EQ(r.cases, 10u);
  EXPECT_EQ(r.mean_accuracy, g["mean_accuracy"].get<double>());
  EXPECT_EQ(r.mode_accuracy, g["mode_accuracy"].get<double>());
  EXPECT_EQ(r.median_accuracy, g["median_accuracy"].get<double>());
  EXPECT_EQ(r.auc_accuracy, g["auc_accuracy"].get<double>());
  EXPECT_EQ(r.ci.accuracy, g["ci_accuracy"].get<double>());
  EXPECT_EQ(r.ci.contains_half, g["ci_correct_containing_half"].get<double>());
  EXPECT_EQ(r.ci.one_sided, g["ci_correct_one_sided"].get<double>());
  EXPECT_NEAR(r.f_score, g["f_score"].get<double>(), 1e-15);
  EXPECT_EQ(r.confusion.tp, g["confusion_percent"]["tp"].get<double>());
  EXPECT_EQ(r.confusion.fp, g["confusion_percent"]["fp"].get<double>());
  EXPECT_EQ(r.confusion.tn, g["confusion_percent"]["tn"].get<double>());
  EXPECT_EQ(r.confusion.fn, g["confusion_percent"]["fn"].get<double>());
  ASSERT_EQ(r.calibration.size(), 10u);
  for (std::size_t b = 0; b < 10; ++b) {
    const auto& gb = g["calibration"][b];
    EXPECT_EQ(r.calibration[b].count, gb["count"].get<std::size_t>());
    if (gb["mean_predicted"].is_null()) {
      EXPECT_FALSE(r.calibration[b].mean_predicted());
    } else {
      EXPECT_NEAR(*r.calibration[b].mean_predicted(), gb["mean_predicted"].get<double>(), 1e-15);
      EXPECT_EQ(*r.calibration[b].observed_fraction(), gb["observed_fraction"].get<double>());
    }
  }
  EXPECT_EQ(r.entropy.all.counts, g["entropy_histograms"]["all"].get<std::vector<std::size_t>>());
  EXPECT_EQ(r.entropy.correct.counts, g["entropy_histograms"]["correct"].get<std::vector<std::size_t>>());
  EXPECT_EQ(r.entropy.incorrect.counts, g["entropy_histograms"]["incorrect"].get<std::vector<std::size_t>>());
}

TEST(Diagnose, HandFixtureHandCounts) {
  // Mean labels: c01 TP, c02 TN, c03 TP (0.5 ties positive), c04 FP,
  // c05 FN, c06 TN, c07 TP, c08 TN, c09 TP, c10 TP.
  const auto c = confusion_counts(hand_summaries());
  EXPECT_EQ(c.tp, 5u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 3u);
  EXPECT_EQ(c.fn, 1u);
  // sensitivity 5/6, specificity 3/4
  EXPECT_NEAR(f_score(hand_summaries()), 2 * (5.0 / 6) * 0.75 / (5.0 / 6 + 0.75), 1e-15);
}

TEST(PointAccuracy, Examples) {
  std::vector<CaseSummary> all_pos(7, with(0.9, Label::positive));
  EXPECT_EQ(point_accuracy(all_pos, PointStatistic::mean), 100.0);
  std::vector<CaseSummary> four{with(0.7, Label::positive), with(0.2, Label::positive), with(0.5, Label::negative),
                                with(0.1, Label::negative)};
  EXPECT_EQ(point_accuracy(four, PointStatistic::median), 50.0);
  EXPECT_EQ(label_from(0.5), Label::positive);
}

TEST(AucAccuracy, MajoritySideAndTie) {
  std::vector<CaseSummary> a{with(0.3, Label::positive, 0, 0, 0.6)};
  EXPECT_EQ(auc_accuracy(a), 100.0);
  std::vector<CaseSummary> tie{with(0.3, Label::positive, 0, 0, 0.5)};
  EXPECT_EQ(auc_accuracy(tie), 100.0);
}

TEST(CiAccuracy, TableRule) {
  std::vector<CaseSummary> cases{with(0.5, Label::negative, 0.4, 0.6), with(0.5, Label::positive, 0.4, 0.6),
                                 with(0.7, Label::positive, 0.6, 0.8), with(0.7, Label::negative, 0.6, 0.8),
                                 with(0.2, Label::negative, 0.1, 0.3)};
  const auto c = ci_accuracy(cases);
  EXPECT_EQ(c.accuracy, 80.0);
  EXPECT_EQ(c.contains_half, 50.0);
  EXPECT_EQ(c.one_sided, 50.0);
}

TEST(FScore, Examples) {
  // specificity 0.8 (8/10 negatives right), sensitivity 0.9 (9/10 positives)
  std::vector<CaseSummary> s;
  for (int i = 0; i < 10; ++i) s.push_back(with(i < 9 ? 0.9 : 0.1, Label::positive));
  for (int i = 0; i < 10; ++i) s.push_back(with(i < 8 ? 0.1 : 0.9, Label::negative));
  EXPECT_NEAR(f_score(s), 2 * 0.72 / 1.7, 1e-15);
  EXPECT_NEAR(f_score(s), 0.8471, 1e-4);

  std::vector<CaseSummary> perfect{with(0.9, Label::positive), with(0.1, Label::negative)};
  EXPECT_EQ(f_score(perfect), 1.0);
  std::vector<CaseSummary> inverted{with(0.1, Label::positive), with(0.9, Label::negative)};
  EXPECT_EQ(f_score(inverted), 0.0);
  std::vector<CaseSummary> no_neg{with(0.9, Label::positive)};
  try {
    f_score(no_neg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
  }
}

TEST(Confusion, Examples) {
  std::vector<CaseSummary> balanced;
  for (int i = 0; i < 5; ++i) balanced.push_back(with(0.9, Label::positive));
  for (int i = 0; i < 5; ++i) balanced.push_back(with(0.1, Label::negative));
  const auto b = confusion_matrix(balanced);
  EXPECT_EQ(b.tp, 50.0);
  EXPECT_EQ(b.tn, 50.0);
  EXPECT_EQ(b.fp + b.fn, 0.0);

  std::vector<CaseSummary> skew;
  for (int i = 0; i < 7; ++i) skew.push_back(with(0.8, Label::positive));
  for (int i = 0; i < 3; ++i) skew.push_back(with(0.8, Label::negative));
  const auto s = confusion_matrix(skew);
  EXPECT_EQ(s.tp, 70.0);
  EXPECT_EQ(s.fp, 30.0);
}

TEST(Entropy, Examples) {
  EXPECT_EQ(binary_entropy(0.5), 1.0);
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.89), 0.4999, 1e-4);
  EXPECT_NEAR(entropy(std::vector<double>{0.4, 0.6}), 1.0, 1e-15);
}

TEST(EntropyProperty, SymmetricAndMonotone) {
  double previous = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double p = i / 1000.0;
    EXPECT_NEAR(binary_entropy(p), binary_entropy(1.0 - p), 1e-12);
    EXPECT_GE(binary_entropy(p), 0.0);
    EXPECT_LE(binary_entropy(p), 1.0);
    if (i <= 500) {
      EXPECT_GE(binary_entropy(p), previous);
      previous = binary_entropy(p);
    }
  }
}

TEST(HistogramEntropy, Bounds) {
  EXPECT_EQ(histogram_entropy(std::vector<double>(10, 0.3)), 0.0);
  std::vector<double> spread;
  for (int b = 0; b < 20; ++b) spread.push_back((b + 0.5) / 20.0);
  EXPECT_NEAR(histogram_entropy(spread), 1.0, 1e-12);
}

TEST(Calibration, Examples) {
  std::vector<CaseSummary> sure(5, with(0.999, Label::positive));
  const auto t = calibration(sure);
  ASSERT_EQ(t.size(), 10u);
  for (std::size_t b = 0; b < 9; ++b) EXPECT_EQ(t[b].count, 0u);
  EXPECT_EQ(t[9].count, 5u);
  EXPECT_EQ(*t[9].observed_fraction(), 1.0);
  EXPECT_NEAR(*t[9].mean_predicted(), 0.999, 1e-12);
}

TEST(Calibration, LawOfLargeNumbers) {
  Rng rng(3);
  std::vector<CaseSummary> s;
  for (int i = 0; i < 100000; ++i) {
    const double p = rng.uniform();
    s.push_back(with(p, rng.bernoulli(p) ? Label::positive : Label::negative));
  }
  const auto t = calibration(s);
  std::size_t total = 0;
  for (const auto& b : t) {
    total += b.count;
    EXPECT_LT(std::abs(*b.observed_fraction() - *b.mean_predicted()), 0.02);
    EXPECT_NEAR(b.high - b.low, 0.1, 1e-12);
  }
  EXPECT_EQ(total, 100000u);
}

TEST(DiagnoseProperty, Invariants) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CaseSummary> s;
    const std::size_t n = 5 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> samples(20 + rng.below(80));
      const double c = rng.uniform();
      for (double& x : samples) x = std::clamp(c + 0.3 * (rng.uniform() - 0.5), 0.0, 1.0);
      s.push_back(summarize_case(samples, i % 2 ? Label::positive : Label::negative));
    }
    const auto r = diagnose(s);
    for (double a : {r.mean_accuracy, r.mode_accuracy, r.median_accuracy, r.auc_accuracy, r.ci.accuracy}) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 100.0);
    }
    EXPECT_NEAR(r.confusion.tp + r.confusion.fp + r.confusion.tn + r.confusion.fn, 100.0, 1e-9);
    EXPECT_NEAR(r.confusion.tp + r.confusion.tn, r.mean_accuracy, 1e-9);
    if (r.ci.accuracy > 0) {
      EXPECT_NEAR(r.ci.contains_half + r.ci.one_sided, 100.0, 1e-9);
    }
    std::size_t binned = 0;
    for (const auto& b : r.calibration) binned += b.count;
    EXPECT_EQ(binned, n);
    EXPECT_EQ(r.entropy.all.total(), n);
    EXPECT_EQ(r.entropy.correct.total() + r.entropy.incorrect.total(), n);
    const auto again = diagnose(s);
    EXPECT_EQ(to_json(again).dump(), to_json(r).dump());
    for (const auto& c : s) {
      EXPECT_LE(c.ci_low, c.median);
      EXPECT_LE(c.median, c.ci_high);
    }
  }
}

TEST(FiveSplitAverage, Examples) {
  const auto r = diagnose(hand_summaries());
  const std::vector<DiagnosticsReport> same(5, r);
  const auto avg = five_split_average(same);
  EXPECT_EQ(avg.mean_accuracy, r.mean_accuracy);
  EXPECT_EQ(avg.f_score, r.f_score);
  EXPECT_EQ(avg.replicates, 5u);
  EXPECT_EQ(avg.entropy.all.total(), 5 * r.entropy.all.total());

  DiagnosticsReport a = r, b = r;
  a.mean_accuracy = 78.0;
  b.mean_accuracy = 80.0;
  const std::vector<DiagnosticsReport> two{a, b};
  EXPECT_EQ(five_split_average(two).mean_accuracy, 79.0);

  const std::vector<DiagnosticsReport> single{r};
  EXPECT_EQ(to_json(five_split_average(single)).dump(), to_json(r).dump());
  EXPECT_THROW(five_split_average(std::vector<DiagnosticsReport>{}), Error);
}

TEST(Diagnose, EmptyIsFatal) { EXPECT_THROW(diagnose(std::vector<CaseSummary>{}), Error); }

TEST(ReportIo, AccuracyTableLayout) {
  const auto r = diagnose(hand_summaries());
  std::ostringstream out;
  const std::vector<std::pair<std::string, DiagnosticsReport>> cols{{"full", r}, {"reduced", r}};
  write_accuracy_table_csv(out, cols);
  const CsvTable t = parse_csv(out.str());
  EXPECT_EQ(t.header, (std::vector<std::string>{"measure", "full", "reduced"}));
  ASSERT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(t.rows[0][0], "Mean Accuracy");
  EXPECT_EQ(t.rows[7][0], "F-Score");
  EXPECT_EQ(*parse_double(t.rows[0][1]), 80.0);
}
