#pragma once

// Fit-and-evaluate protocol: repeated random train/test splits, one MCMC fit
// per training set, diagnostics per test set, averaged across replicates.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmprior/diagnostics.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/model.hpp"
#include "dmprior/parallel.hpp"
#include "dmprior/sampler.hpp"

namespace dmprior {

struct ProtocolConfig {
  PriorSpec prior;
  SamplerConfig sampler;
  SplitPlan plan;
  std::size_t predictive_draws = 100;
  DiagnosticsOptions diagnostics;
  std::size_t workers = 1;
};

struct FittedModel {
  Encoder encoder;
  std::vector<std::string> column_names;
  std::vector<PosteriorChain> chains;
  ConvergenceReport convergence;
};

/// Sampler configuration for replicate `r`: same settings, its own seed.
inline SamplerConfig replicate_sampler(const SamplerConfig& base, std::size_t replicate) {
  SamplerConfig cfg = base;
  cfg.seed = derive_seed(base.seed, "replicate", replicate);
  return cfg;
}

inline FittedModel fit_model(const EncodedDataset& train, const PriorSpec& prior,
                             const SamplerConfig& sampler, std::size_t workers = 1) {
  const LogisticModel model(train, prior);
  FittedModel fitted;
  fitted.encoder = train.encoder;
  fitted.column_names = train.encoder.column_names();
  fitted.chains = run_chains(model, sampler, workers);
  fitted.convergence = convergence(fitted.chains, fitted.column_names);
  return fitted;
}

inline std::vector<CaseSummary> summarize_dataset(std::span<const PosteriorChain> chains,
                                                  const EncodedDataset& data, std::size_t m,
                                                  const SummaryOptions& options = {}) {
  std::vector<CaseSummary> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = predictive_samples(chains, data.design.row(i), m, data.ids[i]);
    out.push_back(summarize_case(p.samples, static_cast<Label>(data.response[i]), data.ids[i], options));
  }
  return out;
}

struct ReplicateResult {
  std::size_t replicate = 0;
  std::uint64_t partition_fingerprint = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  DiagnosticsReport report;
  ConvergenceReport convergence;
  std::vector<std::string> warnings;
};

struct ProtocolResult {
  std::vector<std::string> column_names;  // of the last replicate's encoder
  std::vector<ReplicateResult> replicates;
  DiagnosticsReport average;
};

/// Runs every replicate of `config.plan`. Chains of all replicates are
/// scheduled together on `config.workers` threads. When `models` is non-null
/// it receives each replicate's fitted model.
inline ProtocolResult run_protocol(std::span<const CaseRecord> records, const TableSpec& spec,
                                   const ProtocolConfig& config,
                                   std::vector<FittedModel>* models = nullptr) {
  config.plan.validate();
  config.sampler.validate();
  if (spec.features().empty()) throw usage_error("protocol: model has no predictors");
  const std::vector<CaseRecord> complete = drop_incomplete(records, spec);
  const std::size_t reps = config.plan.replicate_count;

  std::vector<Partition> partitions;
  std::vector<EncodedDataset> trains, tests;
  for (std::size_t r = 0; r < reps; ++r) {
    partitions.push_back(split(complete.size(), config.plan, r));
    const auto train = gather<CaseRecord>(complete, partitions.back().train);
    const auto test = gather<CaseRecord>(complete, partitions.back().test);
    const Provenance prov{static_cast<int>(r), config.plan.base_seed};
    auto [tr, te] = encode(train, test, spec, prov);
    if (te.size() == 0) throw data_error("protocol: replicate test set is empty");
    trains.push_back(std::move(tr));
    tests.push_back(std::move(te));
  }

  std::vector<LogisticModel> targets;
  targets.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) targets.emplace_back(trains[r], config.prior);

  const std::size_t per = config.sampler.chains;
  std::vector<PosteriorChain> all_chains(reps * per);
  parallel_for(reps * per, config.workers, [&](std::size_t job) {
    const std::size_t r = job / per;
    all_chains[job] = run_chain(targets[r], replicate_sampler(config.sampler, r), job % per);
  });

  ProtocolResult result;
  std::vector<DiagnosticsReport> reports;
  const SummaryOptions summary{config.diagnostics.histogram_entropy, config.diagnostics.entropy_bins};
  for (std::size_t r = 0; r < reps; ++r) {
    FittedModel fitted;
    fitted.encoder = trains[r].encoder;
    fitted.column_names = fitted.encoder.column_names();
    fitted.chains.assign(std::make_move_iterator(all_chains.begin() + static_cast<std::ptrdiff_t>(r * per)),
                         std::make_move_iterator(all_chains.begin() + static_cast<std::ptrdiff_t>((r + 1) * per)));
    fitted.convergence = convergence(fitted.chains, fitted.column_names);

    ReplicateResult rep;
    rep.replicate = r;
    rep.partition_fingerprint = partitions[r].fingerprint();
    rep.train_size = trains[r].size();
    rep.test_size = tests[r].size();
    rep.warnings = tests[r].warnings;
    const auto summaries =
        summarize_dataset(fitted.chains, tests[r], config.predictive_draws, summary);
    rep.report = diagnose(summaries, config.diagnostics);
    rep.convergence = fitted.convergence;
    reports.push_back(rep.report);
    result.column_names = fitted.column_names;
    result.replicates.push_back(std::move(rep));
    if (models) models->push_back(std::move(fitted));
  }
  result.average = five_split_average(reports);
  return result;
}

}  // namespace dmprior
