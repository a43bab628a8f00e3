#pragma once

// Variable influence: refits with variable groups removed, single-attribute
// counterfactual sweeps, and coefficient credible intervals.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmprior/diagnostics.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/protocol.hpp"

namespace dmprior {

struct AblationSpec {
  std::string name;
  std::vector<std::string> removed_groups;  // whole features: a numeric or a categorical block
};

struct ProbePrior {
  std::string case_id;
  FitReport fit;
};

struct ModelComparison {
  std::string name;
  std::vector<std::string> removed_groups;
  std::vector<std::string> column_names;
  DiagnosticsReport average;
  std::vector<DiagnosticsReport> replicates;
  std::vector<std::uint64_t> partition_fingerprints;
  std::vector<ProbePrior> probes;  // elicited under the replicate-0 fit
};

struct ComparativeReport {
  std::vector<ModelComparison> models;  // full model first
};

inline constexpr std::string_view kFullModelName = "full";

/// Runs the full protocol for the complete model and for every ablation with
/// identical split plans and sampler seeds.
inline ComparativeReport ablate(std::span<const CaseRecord> records, const TableSpec& spec,
                                std::span<const AblationSpec> ablations,
                                const ProtocolConfig& config,
                                std::span<const std::string> probe_ids = {},
                                std::span<const Family> families = {}) {
  if (config.plan.replicate_count < 1) throw usage_error("ablate: need at least one replicate");
  std::vector<AblationSpec> runs{{std::string(kFullModelName), {}}};
  for (const auto& a : ablations) {
    for (const auto& g : a.removed_groups)
      if (g == kInterceptName) throw usage_error("ablate: the intercept cannot be removed");
    runs.push_back(a);
  }
  const std::vector<Family> default_families{Family::beta};
  if (families.empty()) families = default_families;

  std::vector<const CaseRecord*> probes;
  for (const auto& id : probe_ids) {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.id == id; });
    if (it == records.end()) throw usage_error("ablate: probe case '" + id + "' not found");
    probes.push_back(&*it);
  }

  ComparativeReport report;
  for (const auto& run : runs) {
    const TableSpec reduced = spec.without(run.removed_groups);
    if (reduced.features().empty())
      throw usage_error("ablate: '" + run.name + "' removes every predictor");
    std::vector<FittedModel> models;
    const ProtocolResult result = run_protocol(records, reduced, config, &models);

    ModelComparison cmp;
    cmp.name = run.name;
    cmp.removed_groups = run.removed_groups;
    cmp.column_names = result.column_names;
    cmp.average = result.average;
    for (const auto& rep : result.replicates) {
      cmp.replicates.push_back(rep.report);
      cmp.partition_fingerprints.push_back(rep.partition_fingerprint);
    }
    for (const auto* probe : probes) {
      const auto row = models.front().encoder.encode(*probe);
      cmp.probes.push_back({probe->id, elicit_prior(models.front().chains, row,
                                                    config.predictive_draws, families, probe->id)});
    }
    report.models.push_back(std::move(cmp));
  }
  return report;
}

struct CounterfactualResult {
  std::string value;
  PredictiveSamples samples;
  FitReport fit;
};

/// Re-elicits the prior for `record` with one attribute set to each of
/// `values`, every other attribute held fixed, using the frozen encoder.
inline std::vector<CounterfactualResult> counterfactual(
    std::span<const PosteriorChain> chains, const Encoder& encoder, const CaseRecord& record,
    const std::string& attribute, std::span<const std::string> values, std::size_t m,
    std::span<const Family> families) {
  const FeatureEncoding* feature = encoder.find(attribute);
  if (feature == nullptr)
    throw usage_error("counterfactual: '" + attribute + "' is not a model variable");
  std::vector<CounterfactualResult> out;
  for (const auto& value : values) {
    CaseRecord modified = record;
    if (feature->categorical) {
      const bool known = value == feature->reference ||
                         std::find(feature->levels.begin(), feature->levels.end(), value) !=
                             feature->levels.end();
      if (!known)
        throw usage_error("counterfactual: unknown level '" + value + "' for '" + attribute + "'");
      modified.features[attribute] = value;
    } else {
      const auto number = parse_double(value);
      if (!number)
        throw usage_error("counterfactual: '" + value + "' is not a number for '" + attribute + "'");
      modified.features[attribute] = *number;
    }
    const auto row = encoder.encode(modified);
    CounterfactualResult result{value, predictive_samples(chains, row, m, record.id), {}};
    result.fit = fit_families(result.samples, families);
    out.push_back(std::move(result));
  }
  return out;
}

struct CoefficientSummary {
  std::string name;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool contains_zero = false;
};

/// Posterior mean and equal-tailed 95% interval per coefficient over the
/// pooled draws; flags intervals that contain zero.
inline std::vector<CoefficientSummary> coefficient_relevance(
    std::span<const PosteriorChain> chains, std::span<const std::string> names = {}) {
  if (chains.empty()) throw usage_error("coefficient_relevance: no chains");
  const std::size_t d = chains.front().dimension();
  std::vector<CoefficientSummary> out;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> draws = pooled_column(chains, j);
    std::sort(draws.begin(), draws.end());
    CoefficientSummary s;
    s.name = j < names.size() ? names[j] : "theta_" + std::to_string(j);
    s.mean = sample_moments(draws).mean;
    s.ci_low = quantile_sorted(draws, 0.025);
    s.ci_high = quantile_sorted(draws, 0.975);
    s.contains_zero = s.ci_low <= 0.0 && 0.0 <= s.ci_high;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dmprior
