#pragma once

// Synthetic logistic decision makers with known coefficients, plus the
// oracles used to check recovery, coverage and elicitation fidelity.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dmprior/analysis.hpp"
#include "dmprior/csv.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/model.hpp"
#include "dmprior/protocol.hpp"
#include "dmprior/rng.hpp"
#include "dmprior/sampler.hpp"

namespace dmprior {

struct CategoricalRecipe {
  std::string name;
  std::vector<std::string> levels;  // levels[0] is the reference level
  std::vector<double> probabilities;
};

/// Numeric predictors x1..xk are iid standard normal; categoricals follow
/// their level probabilities. true_theta is laid out as
/// [intercept, numerics..., dummies of each categorical for levels[1..]].
struct Scenario {
  std::vector<double> true_theta;
  std::size_t numeric_count = 0;
  std::vector<CategoricalRecipe> categoricals;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  std::size_t dimension() const {
    std::size_t d = 1 + numeric_count;
    for (const auto& c : categoricals) d += c.levels.size() - 1;
    return d;
  }

  void validate() const {
    if (n < 1) throw usage_error("scenario: n must be >= 1");
    for (const auto& c : categoricals) {
      if (c.levels.size() < 2 || c.levels.size() != c.probabilities.size())
        throw usage_error("scenario: categorical '" + c.name + "' needs >= 2 levels with probabilities");
      const double total = std::accumulate(c.probabilities.begin(), c.probabilities.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-9)
        throw usage_error("scenario: probabilities of '" + c.name + "' do not sum to 1");
    }
    if (true_theta.size() != dimension())
      throw usage_error("scenario: true_theta has " + std::to_string(true_theta.size()) +
                        " entries, expected " + std::to_string(dimension()));
  }

  std::string numeric_name(std::size_t k) const { return "x" + std::to_string(k + 1); }
};

struct SyntheticData {
  TableSpec spec;
  std::vector<CaseRecord> records;
  CsvTable table;  // the same data in ingest CSV form
};

/// The spec the generated CSV is read back with.
inline TableSpec scenario_spec(const Scenario& s) {
  TableSpec spec;
  spec.id_column = "id";
  for (std::size_t k = 0; k < s.numeric_count; ++k)
    spec.columns.push_back(ColumnSpec{.name = s.numeric_name(k), .kind = ColumnKind::numeric});
  for (const auto& c : s.categoricals) {
    ColumnSpec col{.name = c.name, .kind = ColumnKind::categorical};
    col.reference = c.levels.front();
    col.levels = c.levels;
    spec.columns.push_back(std::move(col));
  }
  ColumnSpec decision{.name = "decision", .kind = ColumnKind::decision};
  decision.positive_labels = {"1"};
  decision.negative_labels = {"0"};
  spec.columns.push_back(std::move(decision));
  return spec;
}

/// Raw-scale linear predictor of a generated record.
inline double scenario_eta(const Scenario& s, const CaseRecord& r) {
  double eta = s.true_theta[0];
  std::size_t j = 1;
  for (std::size_t k = 0; k < s.numeric_count; ++k, ++j)
    eta += s.true_theta[j] * std::get<double>(r.features.at(s.numeric_name(k)));
  for (const auto& c : s.categoricals) {
    const auto& level = std::get<std::string>(r.features.at(c.name));
    for (std::size_t l = 1; l < c.levels.size(); ++l, ++j)
      if (level == c.levels[l]) eta += s.true_theta[j];
  }
  return eta;
}

inline SyntheticData generate(const Scenario& s) {
  s.validate();
  SyntheticData out;
  out.spec = scenario_spec(s);
  out.table.header.push_back("id");
  for (std::size_t k = 0; k < s.numeric_count; ++k) out.table.header.push_back(s.numeric_name(k));
  for (const auto& c : s.categoricals) out.table.header.push_back(c.name);
  out.table.header.push_back("decision");

  Rng rng(s.seed, "synth");
  for (std::size_t i = 0; i < s.n; ++i) {
    CaseRecord r;
    r.id = "s" + std::to_string(i + 1);
    std::vector<std::string> row{r.id};
    for (std::size_t k = 0; k < s.numeric_count; ++k) {
      const double x = rng.normal();
      r.features.emplace(s.numeric_name(k), x);
      row.push_back(format_double(x));
    }
    for (const auto& c : s.categoricals) {
      const auto& level = c.levels[rng.categorical(c.probabilities)];
      r.features.emplace(c.name, level);
      row.push_back(level);
    }
    r.decision = rng.bernoulli(inverse_link(scenario_eta(s, r))) ? Label::positive : Label::negative;
    row.push_back(r.decision == Label::positive ? "1" : "0");
    out.records.push_back(std::move(r));
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_escape(fields[i]);
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
}

/// True coefficients in the encoder's standardized coordinates. Since
/// theta_k x_k = theta_k sd_k z_k + theta_k mean_k, the numeric slopes scale
/// by sd and their mean shifts move into the intercept; dummies are unchanged.
inline std::vector<double> encoded_truth(const Scenario& s, const Encoder& encoder) {
  std::vector<double> out(encoder.dimension(), 0.0);
  double intercept = s.true_theta[0];
  std::size_t j = 1;
  for (std::size_t k = 0; k < s.numeric_count; ++k, ++j) {
    const auto* f = encoder.find(s.numeric_name(k));
    if (f == nullptr) continue;
    out[f->first_column] = s.true_theta[j] * f->sd;
    intercept += s.true_theta[j] * f->mean;
  }
  for (const auto& c : s.categoricals) {
    const auto* f = encoder.find(c.name);
    for (std::size_t l = 1; l < c.levels.size(); ++l, ++j) {
      if (f == nullptr) continue;
      if (f->reference != c.levels.front())
        throw usage_error("encoded_truth: '" + c.name + "' must use its first level as reference");
      const auto pos = std::find(f->levels.begin(), f->levels.end(), c.levels[l]);
      if (pos != f->levels.end())
        out[f->first_column + static_cast<std::size_t>(pos - f->levels.begin())] = s.true_theta[j];
    }
  }
  out[0] = intercept;
  return out;
}

/// High-resolution empirical predictive distribution of p* for one case:
/// at least `n_draws` posterior draws from chains on the "oracle" seed
/// stream, never shared with the sampler under test.
inline EmpiricalCdf predictive_oracle(const LogisticModel& model, const SamplerConfig& base,
                                      std::span<const double> case_row, std::size_t n_draws,
                                      std::size_t workers = 1) {
  SamplerConfig cfg = base;
  cfg.seed = derive_seed(base.seed, "oracle");
  const std::size_t per_chain = (n_draws + cfg.chains - 1) / cfg.chains;
  cfg.iterations = cfg.burn_in + per_chain;
  const auto chains = run_chains(model, cfg, workers);
  std::vector<double> p;
  p.reserve(per_chain * cfg.chains);
  for (const auto& c : chains)
    for (std::size_t t = 0; t < c.size(); ++t)
      p.push_back(inverse_link(linear_predictor(c.draws.row(t), case_row)));
  return EmpiricalCdf(std::move(p));
}

// ---------------------------------------------------------------------------
// Bench suite

/// d = 6: intercept, three numerics, one three-level categorical.
inline Scenario recovery_scenario(std::uint64_t seed, std::size_t n = 5000) {
  Scenario s;
  s.numeric_count = 3;
  s.categoricals = {{"group", {"g0", "g1", "g2"}, {0.5, 0.3, 0.2}}};
  s.true_theta = {-0.4, 0.8, -0.5, 0.3, 0.6, -0.7};
  s.n = n;
  s.seed = seed;
  return s;
}

/// Small scenario with a moderately informative posterior for fidelity trials.
inline Scenario fidelity_scenario(std::uint64_t seed, std::size_t n = 300) {
  Scenario s;
  s.numeric_count = 2;
  s.true_theta = {0.3, 1.0, -0.6};
  s.n = n;
  s.seed = seed;
  return s;
}

struct RecoveryOutcome {
  bool all_within_3sd = false;
  std::size_t covered = 0;  // coefficients whose 95% CI covers the truth
  std::size_t dimension = 0;
  std::vector<double> truth;
  std::vector<CoefficientSummary> coefficients;
  std::vector<double> posterior_sd;
};

/// Generates a scenario, reads it back through ingest and encoding, fits the
/// model and compares the posterior with the (standardized) truth.
inline RecoveryOutcome recovery_trial(const Scenario& s, const PriorSpec& prior,
                                      const SamplerConfig& sampler, std::size_t workers = 1) {
  const SyntheticData data = generate(s);
  const LoadResult loaded = load_table(data.table, data.spec);
  const Encoder encoder = fit_encoder(loaded.records, data.spec);
  const EncodedDataset encoded = apply_encoder(encoder, loaded.records);
  const FittedModel fitted = fit_model(encoded, prior, sampler, workers);

  RecoveryOutcome out;
  out.truth = encoded_truth(s, encoder);
  out.dimension = out.truth.size();
  out.coefficients = coefficient_relevance(fitted.chains, fitted.column_names);
  out.all_within_3sd = true;
  for (std::size_t j = 0; j < out.dimension; ++j) {
    const auto draws = pooled_column(fitted.chains, j);
    const double sd = std::sqrt(sample_moments(draws).variance);
    out.posterior_sd.push_back(sd);
    if (std::abs(out.coefficients[j].mean - out.truth[j]) > 3.0 * sd) out.all_within_3sd = false;
    if (out.coefficients[j].ci_low <= out.truth[j] && out.truth[j] <= out.coefficients[j].ci_high)
      ++out.covered;
  }
  return out;
}

struct FidelityOutcome {
  double subsample_ks = 1.0;  // KS(m thinned predictive samples, oracle cdf)
  double beta_ks = 1.0;       // KS between the elicited Beta and the oracle draws
  double shape_ks = 1.0;      // KS between a Beta fitted to the oracle draws and those draws
  double oracle_mean = 0.0;
  double beta_mean = 0.0;
};

/// One elicitation-fidelity trial for the case x = (1, 0.5, -0.5) in raw units.
inline FidelityOutcome fidelity_trial(const Scenario& s, const PriorSpec& prior,
                                      const SamplerConfig& sampler, std::size_t m,
                                      std::size_t oracle_draws, std::size_t workers = 1) {
  const SyntheticData data = generate(s);
  const Encoder encoder = fit_encoder(data.records, data.spec);
  const EncodedDataset encoded = apply_encoder(encoder, data.records);
  const LogisticModel model(encoded, prior);

  CaseRecord probe;
  probe.id = "probe";
  for (std::size_t k = 0; k < s.numeric_count; ++k)
    probe.features.emplace(s.numeric_name(k), k % 2 == 0 ? 0.5 : -0.5);
  for (const auto& c : s.categoricals) probe.features.emplace(c.name, c.levels.front());
  const auto row = encoder.encode(probe);

  const auto chains = run_chains(model, sampler, workers);
  const auto predictive = predictive_samples(chains, row, m, probe.id);
  const EmpiricalCdf oracle = predictive_oracle(model, sampler, row, oracle_draws, workers);
  const BetaParams beta = fit_beta_moments(predictive.samples);
  const BetaParams shape = fit_beta_moments(oracle.sorted());

  FidelityOutcome out;
  out.subsample_ks = ks_two_sample(predictive.samples, oracle.sorted());
  out.beta_ks = ks_statistic(oracle.sorted(), [&](double x) { return beta.cdf(x); });
  out.shape_ks = ks_statistic(oracle.sorted(), [&](double x) { return shape.cdf(x); });
  out.oracle_mean = oracle.mean();
  out.beta_mean = beta.mean();
  return out;
}

struct BenchConfig {
  std::size_t recovery_replications = 20;
  std::size_t recovery_n = 5000;
  std::size_t fidelity_trials = 100;
  std::size_t fidelity_n = 300;
  std::size_t oracle_draws = 100000;
  std::size_t m = 100;
  PriorSpec prior;
  SamplerConfig sampler{.chains = 4, .iterations = 3000, .burn_in = 1000};
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct BenchLine {
  std::string property;
  bool pass = false;
  std::string detail;
};

inline std::vector<BenchLine> run_bench(const BenchConfig& config) {
  std::vector<BenchLine> lines;

  std::vector<RecoveryOutcome> recovery(config.recovery_replications);
  parallel_for(recovery.size(), config.workers, [&](std::size_t r) {
    SamplerConfig sampler = config.sampler;
    sampler.seed = derive_seed(config.seed, "bench-recovery-sampler", r);
    recovery[r] = recovery_trial(
        recovery_scenario(derive_seed(config.seed, "bench-recovery", r), config.recovery_n),
        config.prior, sampler);
  });
  std::size_t within = 0, covered = 0, intervals = 0;
  for (const auto& o : recovery) {
    within += o.all_within_3sd ? 1 : 0;
    covered += o.covered;
    intervals += o.dimension;
  }
  const std::size_t need = (config.recovery_replications * 18 + 19) / 20;
  lines.push_back({"posterior_recovery", within >= need,
                   std::to_string(within) + "/" + std::to_string(recovery.size()) +
                       " replications with every coefficient within 3 posterior sd (need " +
                       std::to_string(need) + ")"});
  const double coverage = intervals ? 100.0 * static_cast<double>(covered) / static_cast<double>(intervals) : 0.0;
  lines.push_back({"ci_coverage", coverage >= 85.0 && coverage <= 100.0,
                   format_double(coverage) + "% of 95% intervals cover the truth (need 85-100%)"});

  std::vector<FidelityOutcome> fidelity(config.fidelity_trials);
  parallel_for(fidelity.size(), config.workers, [&](std::size_t t) {
    SamplerConfig sampler = config.sampler;
    sampler.seed = derive_seed(config.seed, "bench-fidelity-sampler", t);
    fidelity[t] = fidelity_trial(
        fidelity_scenario(derive_seed(config.seed, "bench-fidelity", t), config.fidelity_n),
        config.prior, sampler, config.m, config.oracle_draws);
  });
  const double band = 1.36 / std::sqrt(static_cast<double>(config.m));
  std::size_t inside = 0, beta_close = 0, shape_close = 0, mean_close = 0;
  double worst_beta = 0.0, worst_shape = 0.0;
  for (const auto& f : fidelity) {
    inside += f.subsample_ks < band ? 1 : 0;
    beta_close += f.beta_ks < 0.1 ? 1 : 0;
    shape_close += f.shape_ks < 0.1 ? 1 : 0;
    worst_beta = std::max(worst_beta, f.beta_ks);
    worst_shape = std::max(worst_shape, f.shape_ks);
    mean_close += std::abs(f.oracle_mean - f.beta_mean) < 0.01 ? 1 : 0;
  }
  const std::size_t need_f = (config.fidelity_trials * 90 + 99) / 100;
  lines.push_back({"predictive_subsample_ks", inside >= need_f,
                   std::to_string(inside) + "/" + std::to_string(fidelity.size()) +
                       " trials with KS below " + format_double(band) + " (need " +
                       std::to_string(need_f) + ")"});
  lines.push_back({"beta_oracle_ks", beta_close == fidelity.size(),
                   std::to_string(beta_close) + "/" + std::to_string(fidelity.size()) +
                       " trials with KS(elicited Beta, oracle) < 0.1, worst " + format_double(worst_beta)});
  lines.push_back({"beta_oracle_shape_ks", shape_close == fidelity.size(),
                   std::to_string(shape_close) + "/" + std::to_string(fidelity.size()) +
                       " trials with KS(Beta fitted to the oracle, oracle) < 0.1, worst " +
                       format_double(worst_shape)});
  lines.push_back({"beta_oracle_mean", mean_close >= need_f,
                   std::to_string(mean_close) + "/" + std::to_string(fidelity.size()) +
                       " trials with |oracle mean - Beta mean| < 0.01"});
  return lines;
}

}  // namespace dmprior
