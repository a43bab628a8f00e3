#pragma once

// JSON and CSV renderings of fitted models, diagnostics and elicited priors.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dmprior/analysis.hpp"
#include "dmprior/csv.hpp"
#include "dmprior/diagnostics.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/sampler.hpp"
#include "dmprior/svg.hpp"

namespace dmprior {

using Json = nlohmann::ordered_json;

namespace detail {
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
}  // namespace detail

// ---------------------------------------------------------------------------
// Encoder

inline Json to_json(const Encoder& encoder) {
  Json features = Json::array();
  for (const auto& f : encoder.features()) {
    Json j{{"name", f.name}, {"kind", f.categorical ? "categorical" : "numeric"}};
    if (f.categorical) {
      j["reference"] = f.reference;
      j["levels"] = f.levels;
    } else {
      j["mean"] = f.mean;
      j["sd"] = f.sd;
    }
    j["first_column"] = f.first_column;
    features.push_back(std::move(j));
  }
  return Json{{"columns", encoder.column_names()}, {"features", std::move(features)}};
}

inline Encoder encoder_from_json(const Json& j) {
  std::vector<FeatureEncoding> features;
  for (const auto& f : j.at("features")) {
    FeatureEncoding e;
    e.name = f.at("name").get<std::string>();
    e.categorical = f.at("kind").get<std::string>() == "categorical";
    if (e.categorical) {
      e.reference = f.at("reference").get<std::string>();
      e.levels = f.at("levels").get<std::vector<std::string>>();
    } else {
      e.mean = f.at("mean").get<double>();
      e.sd = f.at("sd").get<double>();
    }
    features.push_back(std::move(e));
  }
  return Encoder(std::move(features));
}

// ---------------------------------------------------------------------------
// Sampler

inline Json to_json(const ConvergenceReport& r) {
  Json params = Json::array();
  for (std::size_t j = 0; j < r.names.size(); ++j)
    params.push_back({{"name", r.names[j]},
                      {"ess", detail::number_or_null(r.ess[j])},
                      {"rhat", detail::number_or_null(r.rhat[j])}});
  return Json{{"rhat_threshold", r.rhat_threshold},
              {"ess_threshold", r.ess_threshold},
              {"flagged", r.flagged()},
              {"issues", r.issues},
              {"parameters", std::move(params)}};
}

inline Json chains_json(std::span<const PosteriorChain> chains) {
  Json out = Json::array();
  for (const auto& c : chains)
    out.push_back({{"chain", c.chain_index},
                   {"seed", c.seed},
                   {"kept_draws", c.size()},
                   {"acceptance_rate", c.acceptance_rate},
                   {"proposal_scales", c.proposal_scales}});
  return out;
}

// ---------------------------------------------------------------------------
// Elicitation

inline Json to_json(const ElicitedPrior& p) {
  Json params = p.family == Family::beta ? Json{{"alpha", p.params[0]}, {"beta", p.params[1]}}
                                         : Json{{"mu", p.params[0]}, {"sigma", p.params[1]}};
  return Json{{"family", to_string(p.family)},
              {"fit_method", to_string(p.fit_method)},
              {"params", std::move(params)},
              {"ks", p.ks_statistic}};
}

/// {case_id, family, params, ks, moments, m, seed} for the selected family,
/// plus every fitted candidate.
inline Json prior_json(const FitReport& fit, std::uint64_t seed) {
  const ElicitedPrior& chosen = fit.selected_prior();
  Json candidates = Json::array();
  if (fit.beta) candidates.push_back(to_json(*fit.beta));
  if (fit.logit_normal) candidates.push_back(to_json(*fit.logit_normal));
  Json j{{"case_id", fit.case_id},
         {"family", to_string(chosen.family)},
         {"fit_method", to_string(chosen.fit_method)},
         {"params", to_json(chosen)["params"]},
         {"ks", chosen.ks_statistic},
         {"moments", {{"mean", fit.moments.mean}, {"variance", fit.moments.variance}}},
         {"m", fit.m},
         {"seed", seed},
         {"candidates", std::move(candidates)},
         {"nudged", fit.nudged}};
  if (!fit.failures.empty()) j["failures"] = fit.failures;
  return j;
}

// ---------------------------------------------------------------------------
// Diagnostics

inline Json to_json(const CalibrationTable& table) {
  Json out = Json::array();
  for (const auto& b : table)
    out.push_back({{"low", b.low},
                   {"high", b.high},
                   {"count", b.count},
                   {"mean_predicted", detail::optional_number(b.mean_predicted())},
                   {"observed_fraction", detail::optional_number(b.observed_fraction())}});
  return out;
}

inline Json to_json(const EntropyHistograms& h) {
  return Json{{"bins", h.all.counts.size()},
              {"all", h.all.counts},
              {"correct", h.correct.counts},
              {"incorrect", h.incorrect.counts}};
}

inline Json to_json(const DiagnosticsReport& r) {
  Json j{{"cases", r.cases},
         {"replicates", r.replicates},
         {"mean_accuracy", r.mean_accuracy},
         {"mode_accuracy", r.mode_accuracy},
         {"median_accuracy", r.median_accuracy},
         {"auc_accuracy", r.auc_accuracy},
         {"ci_accuracy", r.ci.accuracy},
         {"ci_correct_containing_half", r.ci.contains_half},
         {"ci_correct_one_sided", r.ci.one_sided},
         {"f_score", r.f_score},
         {"confusion_percent",
          {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
         {"calibration", to_json(r.calibration)},
         {"entropy_histograms", to_json(r.entropy)}};
  if (r.histogram_entropy) j["histogram_entropy_histograms"] = to_json(*r.histogram_entropy);
  return j;
}

inline const std::vector<std::pair<std::string, double DiagnosticsReport::*>>& table_rows() {
  static const std::vector<std::pair<std::string, double DiagnosticsReport::*>> rows{
      {"Mean Accuracy", &DiagnosticsReport::mean_accuracy},
      {"Mode Accuracy", &DiagnosticsReport::mode_accuracy},
      {"Median Accuracy", &DiagnosticsReport::median_accuracy},
      {"AUC Accuracy", &DiagnosticsReport::auc_accuracy}};
  return rows;
}

/// Accuracy table with one value column per model.
inline void write_accuracy_table_csv(
    std::ostream& out, std::span<const std::pair<std::string, DiagnosticsReport>> models) {
  out << "measure";
  for (const auto& [name, _] : models) out << ',' << csv_escape(name);
  out << '\n';
  auto row = [&](const std::string& label, auto get) {
    out << csv_escape(label);
    for (const auto& [_, r] : models) out << ',' << format_double(get(r));
    out << '\n';
  };
  for (const auto& [label, member] : table_rows())
    row(label, [member](const DiagnosticsReport& r) { return r.*member; });
  row("95% CI Accuracy", [](const DiagnosticsReport& r) { return r.ci.accuracy; });
  row("Percentage of 95% CI correct predictions that contain 0.5",
      [](const DiagnosticsReport& r) { return r.ci.contains_half; });
  row("Percentage of 95% CI correct predictions either side of 0.5",
      [](const DiagnosticsReport& r) { return r.ci.one_sided; });
  row("F-Score", [](const DiagnosticsReport& r) { return r.f_score; });
}

inline void write_confusion_csv(std::ostream& out, const DiagnosticsReport& r) {
  out << "cell,percent\n";
  out << "true_positive," << format_double(r.confusion.tp) << '\n';
  out << "false_positive," << format_double(r.confusion.fp) << '\n';
  out << "true_negative," << format_double(r.confusion.tn) << '\n';
  out << "false_negative," << format_double(r.confusion.fn) << '\n';
}

inline void write_calibration_csv(std::ostream& out, const CalibrationTable& table) {
  out << "bin_low,bin_high,count,mean_predicted,observed_fraction\n";
  for (const auto& b : table) {
    out << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << ',';
    if (auto v = b.mean_predicted()) out << format_double(*v);
    out << ',';
    if (auto v = b.observed_fraction()) out << format_double(*v);
    out << '\n';
  }
}

inline void write_entropy_csv(std::ostream& out, const EntropyHistograms& h) {
  const std::size_t bins = h.all.counts.size();
  out << "bin_low,bin_high,all,correct,incorrect\n";
  for (std::size_t b = 0; b < bins; ++b)
    out << format_double(static_cast<double>(b) / static_cast<double>(bins)) << ','
        << format_double(static_cast<double>(b + 1) / static_cast<double>(bins)) << ','
        << h.all.counts[b] << ',' << h.correct.counts[b] << ',' << h.incorrect.counts[b] << '\n';
}

inline std::string calibration_svg(const CalibrationTable& table) {
  svg::Series s{"observed", {}, {}};
  for (const auto& b : table) {
    if (b.count == 0) continue;
    s.x.push_back(*b.mean_predicted());
    s.y.push_back(*b.observed_fraction());
  }
  return svg::line_chart({s}, "Calibration", "mean predicted probability",
                         "observed positive fraction", true);
}

inline std::string entropy_svg(const Histogram& h, const std::string& title) {
  return svg::bar_chart(h.counts, title, "entropy", "cases");
}

// ---------------------------------------------------------------------------
// Analysis

inline Json to_json(std::span<const CoefficientSummary> coefficients) {
  Json out = Json::array();
  for (const auto& c : coefficients)
    out.push_back({{"name", c.name},
                   {"mean", c.mean},
                   {"ci_low", c.ci_low},
                   {"ci_high", c.ci_high},
                   {"contains_zero", c.contains_zero}});
  return out;
}

inline void write_coefficients_csv(std::ostream& out, std::span<const CoefficientSummary> coefficients) {
  out << "name,mean,ci_low,ci_high,contains_zero\n";
  for (const auto& c : coefficients)
    out << csv_escape(c.name) << ',' << format_double(c.mean) << ',' << format_double(c.ci_low)
        << ',' << format_double(c.ci_high) << ',' << (c.contains_zero ? "true" : "false") << '\n';
}

inline Json to_json(const ComparativeReport& report, std::uint64_t seed) {
  Json models = Json::array();
  for (const auto& m : report.models) {
    Json reps = Json::array();
    for (std::size_t r = 0; r < m.replicates.size(); ++r)
      reps.push_back({{"replicate", r},
                      {"partition_fingerprint", m.partition_fingerprints[r]},
                      {"report", to_json(m.replicates[r])}});
    Json probes = Json::array();
    for (const auto& p : m.probes) probes.push_back(prior_json(p.fit, seed));
    models.push_back({{"name", m.name},
                      {"removed_groups", m.removed_groups},
                      {"columns", m.column_names},
                      {"average", to_json(m.average)},
                      {"replicates", std::move(reps)},
                      {"probes", std::move(probes)}});
  }
  return Json{{"models", std::move(models)}};
}

}  // namespace dmprior
