#pragma once

// Model-selection diagnostics over a test set. Every case contributes a
// predictive sample set; labels are derived from its mean, median, mode,
// posterior mass above 0.5, or its 95% credible interval.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmprior/elicit.hpp"
#include "dmprior/error.hpp"
#include "dmprior/ingest.hpp"

namespace dmprior {

inline constexpr std::size_t kModeBins = 50;
inline constexpr double kDecisionThreshold = 0.5;

/// Binary entropy in bits with 0 log 0 = 0.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Entropy of a predictive sample set: binary entropy of its mean.
inline double entropy(std::span<const double> samples) {
  return binary_entropy(sample_moments(samples).mean);
}

/// Alternative estimator: Shannon entropy of a `bins`-bin histogram on
/// [0, 1], normalized by log(bins) to lie in [0, 1].
inline double histogram_entropy(std::span<const double> samples, std::size_t bins = 20) {
  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>(std::floor(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins)));
    ++counts[std::min(b, bins - 1)];
  }
  double h = 0.0;
  const auto n = static_cast<double>(samples.size());
  for (auto c : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / n;
    h -= q * std::log(q);
  }
  return h / std::log(static_cast<double>(bins));
}

/// Linear-interpolation quantile of sorted data (position (m - 1) q).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Histogram mode: the fullest of kModeBins equal bins on [0, 1] (ties go
/// to the lower bin), reported as the mean of the samples inside it.
inline double histogram_mode(std::span<const double> sorted) {
  std::vector<std::vector<double>> bins(kModeBins);
  for (double x : sorted) {
    auto b = static_cast<std::size_t>(std::floor(std::clamp(x, 0.0, 1.0) * kModeBins));
    bins[std::min(b, kModeBins - 1)].push_back(x);
  }
  const auto best = std::max_element(bins.begin(), bins.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return compensated_sum(*best) / static_cast<double>(best->size());
}

struct CaseSummary {
  std::string case_id;
  Label truth = Label::negative;
  double mean = 0.0;
  double median = 0.0;
  double mode = 0.0;
  double ci_low = 0.0;   // 2.5th percentile
  double ci_high = 0.0;  // 97.5th percentile
  double above_mass = 0.0;
  double entropy = 0.0;
  std::optional<double> histogram_entropy;
};

struct SummaryOptions {
  bool histogram_entropy = false;
  std::size_t entropy_bins = 20;
};

inline CaseSummary summarize_case(std::span<const double> samples, Label truth,
                                  std::string case_id = {}, const SummaryOptions& options = {}) {
  if (samples.size() < 2) throw usage_error("summarize_case: need at least 2 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  CaseSummary s;
  s.case_id = std::move(case_id);
  s.truth = truth;
  s.mean = sample_moments(sorted).mean;
  s.median = quantile_sorted(sorted, 0.5);
  s.mode = histogram_mode(sorted);
  s.ci_low = quantile_sorted(sorted, 0.025);
  s.ci_high = quantile_sorted(sorted, 0.975);
  const auto above = static_cast<std::size_t>(
      sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), kDecisionThreshold));
  s.above_mass = static_cast<double>(above) / static_cast<double>(sorted.size());
  s.entropy = binary_entropy(s.mean);
  if (options.histogram_entropy) s.histogram_entropy = dmprior::histogram_entropy(sorted, options.entropy_bins);
  return s;
}

enum class PointStatistic { mean, median, mode };

/// A statistic at exactly 0.5 labels positive.
inline Label label_from(double statistic) {
  return statistic >= kDecisionThreshold ? Label::positive : Label::negative;
}

inline double statistic_of(const CaseSummary& s, PointStatistic which) {
  switch (which) {
    case PointStatistic::mean: return s.mean;
    case PointStatistic::median: return s.median;
    case PointStatistic::mode: return s.mode;
  }
  return s.mean;
}

namespace detail {
inline void require_cases(std::span<const CaseSummary> summaries, const char* what) {
  if (summaries.empty()) throw data_error(std::string(what) + ": empty test set");
}
inline double percent(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}
}  // namespace detail

inline double point_accuracy(std::span<const CaseSummary> summaries, PointStatistic which) {
  detail::require_cases(summaries, "point_accuracy");
  std::size_t correct = 0;
  for (const auto& s : summaries)
    if (label_from(statistic_of(s, which)) == s.truth) ++correct;
  return detail::percent(correct, summaries.size());
}

/// Labels by whichever side of 0.5 holds more predictive mass (tie: positive).
inline double auc_accuracy(std::span<const CaseSummary> summaries) {
  detail::require_cases(summaries, "auc_accuracy");
  std::size_t correct = 0;
  for (const auto& s : summaries)
    if (label_from(s.above_mass) == s.truth) ++correct;
  return detail::percent(correct, summaries.size());
}

struct CiAccuracy {
  double accuracy = 0.0;          // percent of all cases
  double contains_half = 0.0;     // percent of correct cases whose CI contains 0.5
  double one_sided = 0.0;         // percent of correct cases whose CI excludes 0.5
};

/// A CI containing 0.5 counts as correct for either label; otherwise the
/// side of 0.5 it lies on must match the truth.
inline CiAccuracy ci_accuracy(std::span<const CaseSummary> summaries) {
  detail::require_cases(summaries, "ci_accuracy");
  std::size_t containing = 0, one_sided = 0;
  for (const auto& s : summaries) {
    if (s.ci_low <= kDecisionThreshold && kDecisionThreshold <= s.ci_high) {
      ++containing;
    } else if ((s.ci_low > kDecisionThreshold) == (s.truth == Label::positive)) {
      ++one_sided;
    }
  }
  const std::size_t correct = containing + one_sided;
  return {detail::percent(correct, summaries.size()), detail::percent(containing, correct),
          detail::percent(one_sided, correct)};
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Mean-statistic labels against the truth.
inline ConfusionCounts confusion_counts(std::span<const CaseSummary> summaries) {
  ConfusionCounts c;
  for (const auto& s : summaries) {
    const bool predicted = label_from(s.mean) == Label::positive;
    const bool actual = s.truth == Label::positive;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct ConfusionPercentages {
  double tp = 0.0, fp = 0.0, tn = 0.0, fn = 0.0;
};

inline ConfusionPercentages confusion_matrix(std::span<const CaseSummary> summaries) {
  detail::require_cases(summaries, "confusion_matrix");
  const auto c = confusion_counts(summaries);
  const auto n = c.total();
  return {detail::percent(c.tp, n), detail::percent(c.fp, n), detail::percent(c.tn, n),
          detail::percent(c.fn, n)};
}

/// Harmonic mean of specificity and sensitivity under mean-statistic labels.
inline double f_score(std::span<const CaseSummary> summaries) {
  detail::require_cases(summaries, "f_score");
  const auto c = confusion_counts(summaries);
  if (c.tp + c.fn == 0) throw data_error("f_score: test set has no positive cases");
  if (c.tn + c.fp == 0) throw data_error("f_score: test set has no negative cases");
  const double sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  if (sensitivity + specificity == 0.0) return 0.0;
  return 2.0 * specificity * sensitivity / (specificity + sensitivity);
}

struct CalibrationBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  double sum_predicted = 0.0;
  std::size_t positives = 0;

  std::optional<double> mean_predicted() const {
    if (count == 0) return std::nullopt;
    return sum_predicted / static_cast<double>(count);
  }
  std::optional<double> observed_fraction() const {
    if (count == 0) return std::nullopt;
    return static_cast<double>(positives) / static_cast<double>(count);
  }
};

using CalibrationTable = std::vector<CalibrationBin>;

inline std::size_t bin_index(double x, std::size_t bins) {
  const auto b = static_cast<std::size_t>(std::floor(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

/// Equal-width bins on the mean predictive probability.
inline CalibrationTable calibration(std::span<const CaseSummary> summaries, std::size_t bins = 10) {
  if (bins < 2) throw usage_error("calibration: need at least 2 bins");
  CalibrationTable table(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    table[b].low = static_cast<double>(b) / static_cast<double>(bins);
    table[b].high = static_cast<double>(b + 1) / static_cast<double>(bins);
  }
  for (const auto& s : summaries) {
    auto& bin = table[bin_index(s.mean, bins)];
    ++bin.count;
    bin.sum_predicted += s.mean;
    if (s.truth == Label::positive) ++bin.positives;
  }
  return table;
}

struct Histogram {
  std::vector<std::size_t> counts;  // equal-width bins on [0, 1]

  void add(double x) { ++counts[bin_index(x, counts.size())]; }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

struct EntropyHistograms {
  Histogram all, correct, incorrect;  // correctness under mean-statistic labels
};

inline EntropyHistograms entropy_histograms(std::span<const CaseSummary> summaries,
                                            std::size_t bins, bool use_histogram_entropy) {
  EntropyHistograms h{{std::vector<std::size_t>(bins, 0)},
                      {std::vector<std::size_t>(bins, 0)},
                      {std::vector<std::size_t>(bins, 0)}};
  for (const auto& s : summaries) {
    const double e = use_histogram_entropy ? s.histogram_entropy.value_or(0.0) : s.entropy;
    h.all.add(e);
    (label_from(s.mean) == s.truth ? h.correct : h.incorrect).add(e);
  }
  return h;
}

struct DiagnosticsOptions {
  std::size_t calibration_bins = 10;
  std::size_t entropy_bins = 20;
  bool histogram_entropy = false;  // also report the histogram-entropy variant
};

struct DiagnosticsReport {
  std::size_t cases = 0;
  std::size_t replicates = 1;
  double mean_accuracy = 0.0;
  double mode_accuracy = 0.0;
  double median_accuracy = 0.0;
  double auc_accuracy = 0.0;
  CiAccuracy ci;
  double f_score = 0.0;
  ConfusionPercentages confusion;
  CalibrationTable calibration;
  EntropyHistograms entropy;
  std::optional<EntropyHistograms> histogram_entropy;
};

inline DiagnosticsReport diagnose(std::span<const CaseSummary> summaries,
                                  const DiagnosticsOptions& options = {}) {
  detail::require_cases(summaries, "diagnose");
  DiagnosticsReport r;
  r.cases = summaries.size();
  r.mean_accuracy = point_accuracy(summaries, PointStatistic::mean);
  r.mode_accuracy = point_accuracy(summaries, PointStatistic::mode);
  r.median_accuracy = point_accuracy(summaries, PointStatistic::median);
  r.auc_accuracy = dmprior::auc_accuracy(summaries);
  r.ci = ci_accuracy(summaries);
  r.f_score = dmprior::f_score(summaries);
  r.confusion = confusion_matrix(summaries);
  r.calibration = dmprior::calibration(summaries, options.calibration_bins);
  r.entropy = entropy_histograms(summaries, options.entropy_bins, false);
  if (options.histogram_entropy)
    r.histogram_entropy = entropy_histograms(summaries, options.entropy_bins, true);
  return r;
}

namespace detail {
inline void pool_into(Histogram& into, const Histogram& from) {
  if (into.counts.size() != from.counts.size())
    throw usage_error("five_split_average: histogram bin counts differ");
  for (std::size_t b = 0; b < from.counts.size(); ++b) into.counts[b] += from.counts[b];
}
inline void pool_into(EntropyHistograms& into, const EntropyHistograms& from) {
  pool_into(into.all, from.all);
  pool_into(into.correct, from.correct);
  pool_into(into.incorrect, from.incorrect);
}
}  // namespace detail

/// Arithmetic mean of every scalar metric; histograms and calibration bins
/// are pooled.
inline DiagnosticsReport five_split_average(std::span<const DiagnosticsReport> reports) {
  if (reports.empty()) throw usage_error("five_split_average: no reports");
  DiagnosticsReport avg = reports.front();
  if (reports.size() == 1) return avg;
  const auto k = static_cast<double>(reports.size());
  auto mean_of = [&](auto field) {
    double s = 0.0;
    for (const auto& r : reports) s += field(r);
    return s / k;
  };
  avg.replicates = 0;
  avg.cases = 0;
  for (const auto& r : reports) {
    avg.replicates += r.replicates;
    avg.cases += r.cases;
  }
  avg.mean_accuracy = mean_of([](const auto& r) { return r.mean_accuracy; });
  avg.mode_accuracy = mean_of([](const auto& r) { return r.mode_accuracy; });
  avg.median_accuracy = mean_of([](const auto& r) { return r.median_accuracy; });
  avg.auc_accuracy = mean_of([](const auto& r) { return r.auc_accuracy; });
  avg.ci.accuracy = mean_of([](const auto& r) { return r.ci.accuracy; });
  avg.ci.contains_half = mean_of([](const auto& r) { return r.ci.contains_half; });
  avg.ci.one_sided = mean_of([](const auto& r) { return r.ci.one_sided; });
  avg.f_score = mean_of([](const auto& r) { return r.f_score; });
  avg.confusion.tp = mean_of([](const auto& r) { return r.confusion.tp; });
  avg.confusion.fp = mean_of([](const auto& r) { return r.confusion.fp; });
  avg.confusion.tn = mean_of([](const auto& r) { return r.confusion.tn; });
  avg.confusion.fn = mean_of([](const auto& r) { return r.confusion.fn; });
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.calibration.size() != avg.calibration.size())
      throw usage_error("five_split_average: calibration bin counts differ");
    for (std::size_t b = 0; b < r.calibration.size(); ++b) {
      avg.calibration[b].count += r.calibration[b].count;
      avg.calibration[b].sum_predicted += r.calibration[b].sum_predicted;
      avg.calibration[b].positives += r.calibration[b].positives;
    }
    detail::pool_into(avg.entropy, r.entropy);
    if (avg.histogram_entropy && r.histogram_entropy)
      detail::pool_into(*avg.histogram_entropy, *r.histogram_entropy);
  }
  return avg;
}

}  // namespace dmprior
