#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "dmprior/synthbench.hpp"

using namespace dmprior;

namespace {

double positive_rate(const SyntheticData& d) {
  std::size_t pos = 0;
  for (const auto& r : d.records) pos += r.decision == Label::positive ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(d.records.size());
}

}  // namespace

TEST(Generate, InterceptOnlyRates) {
  Scenario s;
  s.true_theta = {0.0};
  s.n = 10000;
  s.seed = 1;
  EXPECT_NEAR(positive_rate(generate(s)), 0.5, 0.02);
  s.true_theta = {std::log(3.0)};
  EXPECT_NEAR(positive_rate(generate(s)), 0.75, 0.02);
}

TEST(Generate, DeterministicAndSeedSensitive) {
  const auto s = recovery_scenario(4, 300);
  std::ostringstream a, b;
  write_csv(a, generate(s).table);
  write_csv(b, generate(s).table);
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_csv(c, generate(recovery_scenario(5, 300)).table);
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, CsvRoundTripsThroughIngest) {
  const auto s = recovery_scenario(2, 500);
  const auto data = generate(s);
  std::ostringstream out;
  write_csv(out, data.table);
  const auto loaded = load_table(parse_csv(out.str()), data.spec);
  ASSERT_EQ(loaded.records.size(), data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    EXPECT_EQ(loaded.records[i].id, data.records[i].id);
    EXPECT_EQ(loaded.records[i].decision, data.records[i].decision);
    EXPECT_EQ(std::get<double>(loaded.records[i].features.at("x1")),
              std::get<double>(data.records[i].features.at("x1")));
    EXPECT_EQ(std::get<std::string>(loaded.records[i].features.at("group")),
              std::get<std::string>(data.records[i].features.at("group")));
  }
}

TEST(Generate, LevelFrequencies) {
  auto s = recovery_scenario(3, 20000);
  const auto data = generate(s);
  std::map<std::string, double> freq;
  for (const auto& r : data.records) freq[std::get<std::string>(r.features.at("group"))] += 1.0 / 20000;
  EXPECT_NEAR(freq["g0"], 0.5, 0.015);
  EXPECT_NEAR(freq["g1"], 0.3, 0.015);
  EXPECT_NEAR(freq["g2"], 0.2, 0.015);
}

TEST(Scenario, Validation) {
  Scenario s;
  s.numeric_count = 1;
  s.true_theta = {0.0};
  EXPECT_THROW(generate(s), Error);
  s.true_theta = {0.0, 1.0};
  s.categoricals = {{"g", {"a", "b"}, {0.5, 0.6}}};
  EXPECT_THROW(s.validate(), Error);
  s.categoricals = {{"g", {"a"}, {1.0}}};
  EXPECT_THROW(s.validate(), Error);
}

TEST(EncodedTruth, MatchesLinearPredictor) {
  // The standardized truth must give the same linear predictor as the raw one.
  const auto s = recovery_scenario(9, 400);
  const auto data = generate(s);
  const auto encoder = fit_encoder(data.records, data.spec);
  const auto truth = encoded_truth(s, encoder);
  ASSERT_EQ(truth.size(), s.dimension());
  for (std::size_t i = 0; i < 50; ++i) {
    const auto row = encoder.encode(data.records[i]);
    EXPECT_NEAR(linear_predictor(truth, row), scenario_eta(s, data.records[i]), 1e-9);
  }
}

TEST(PredictiveOracle, AgainstItselfIsZero) {
  const auto s = fidelity_scenario(3, 200);
  const auto data = generate(s);
  const auto encoder = fit_encoder(data.records, data.spec);
  const auto encoded = apply_encoder(encoder, data.records);
  const LogisticModel model(encoded, PriorSpec{});
  const SamplerConfig sampler{.chains = 2, .iterations = 1000, .burn_in = 500, .seed = 3};
  const auto row = encoder.encode(data.records[0]);
  const auto oracle = predictive_oracle(model, sampler, row, 4000);
  EXPECT_GE(oracle.sorted().size(), 4000u);
  EXPECT_EQ(ks_two_sample(oracle.sorted(), oracle.sorted()), 0.0);
  // the oracle stream never reuses the sampler's chains
  const auto chains = run_chains(model, sampler);
  const auto oracle_again = predictive_oracle(model, sampler, row, 4000);
  EXPECT_EQ(std::vector<double>(oracle.sorted().begin(), oracle.sorted().end()),
            std::vector<double>(oracle_again.sorted().begin(), oracle_again.sorted().end()));
  auto oracle_cfg = sampler;
  oracle_cfg.seed = derive_seed(sampler.seed, "oracle");
  const auto oracle_chains = run_chains(model, oracle_cfg);
  for (std::size_t c = 0; c < chains.size(); ++c) EXPECT_NE(chains[c].seed, oracle_chains[c].seed);
}

TEST(RecoveryTrial, SmallScenarioRecovers) {
  const auto outcome = recovery_trial(recovery_scenario(21, 2000), PriorSpec{},
                                      {.chains = 2, .iterations = 2000, .burn_in = 500, .seed = 21});
  EXPECT_EQ(outcome.dimension, 6u);
  EXPECT_TRUE(outcome.all_within_3sd);
  EXPECT_GE(outcome.covered, 4u);
}

TEST(FidelityTrial, SingleTrialWithinBand) {
  const auto f = fidelity_trial(fidelity_scenario(22), PriorSpec{},
                                {.chains = 2, .iterations = 2000, .burn_in = 500, .seed = 22}, 100, 20000);
  EXPECT_LT(f.subsample_ks, 0.3);
  EXPECT_LT(std::abs(f.oracle_mean - f.beta_mean), 0.05);
}
