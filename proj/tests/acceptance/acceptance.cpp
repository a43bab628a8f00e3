// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit status 1 if
// any criterion fails. Pass criterion numbers as arguments to run a subset.
//
// Criterion 8 needs the parole interview CSV; point DMPRIOR_PAROLE_CSV at a
// copy filtered to initial interviews. It is skipped otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dmprior/config.hpp"
#include "dmprior/dmprior.hpp"

using namespace dmprior;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Sampler correctness

struct StandardNormal {
  std::size_t dimension() const { return 1; }
  double log_density(std::span<const double> x) const { return -0.5 * x[0] * x[0]; }
};

struct StepDensity {
  std::vector<double> weights{1, 3, 5, 2, 0.5, 4, 6, 1, 2, 0.5};
  std::size_t dimension() const { return 1; }
  double log_density(std::span<const double> x) const {
    if (x[0] < 0.0 || x[0] >= 10.0) return -std::numeric_limits<double>::infinity();
    return std::log(weights[static_cast<std::size_t>(x[0])]);
  }
};

Outcome sampler_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto normal = run_chain(StandardNormal{}, {.chains = 1, .iterations = 55000, .burn_in = 5000, .seed = 1}, 0);
  const auto col = normal.draws.column(0);
  double mean = 0.0, var = 0.0;
  for (double x : col) mean += x;
  mean /= static_cast<double>(col.size());
  for (double x : col) var += (x - mean) * (x - mean);
  var /= static_cast<double>(col.size());

  const StepDensity step;
  const auto chain = run_chain(step, {.chains = 1, .iterations = 1005000, .burn_in = 5000, .seed = 3}, 0,
                               std::vector<double>{0.5});
  std::vector<double> counts(10, 0.0);
  for (std::size_t t = 0; t < chain.size(); ++t) counts[static_cast<std::size_t>(chain.draws(t, 0))] += 1.0;
  double total = 0.0, tv = 0.0;
  for (double w : step.weights) total += w;
  for (std::size_t k = 0; k < 10; ++k)
    tv += std::abs(counts[k] / static_cast<double>(chain.size()) - step.weights[k] / total);
  tv *= 0.5;
  const double elapsed = seconds_since(t0);

  const bool ok = col.size() == 50000 && std::abs(mean) < 0.05 && var >= 0.9 && var <= 1.1 &&
                  chain.size() == 1000000 && tv <= 0.02 && elapsed < 60.0;
  return verdict(ok, "normal mean " + fmt(mean) + " (|.|<0.05), variance " + fmt(var) +
                         " (in [0.9,1.1]) over 50000 draws; step-density TV " + fmt(tv) +
                         " (<=0.02) over 10^6 draws; " + fmt(elapsed, 1) + " s (<60)");
}

// ---------------------------------------------------------------------------
// 2 and 4. Synthetic ground truth

std::vector<BenchLine> bench_lines() {
  static std::vector<BenchLine> lines;
  if (lines.empty()) {
    BenchConfig config;
    config.seed = 20240601;
    config.workers = workers();
    lines = run_bench(config);
  }
  return lines;
}

const BenchLine& line(const std::string& property) {
  static std::vector<BenchLine> lines = bench_lines();
  for (const auto& l : lines)
    if (l.property == property) return l;
  throw std::logic_error("missing bench property " + property);
}

Outcome posterior_recovery() {
  const auto& a = line("posterior_recovery");
  const auto& b = line("ci_coverage");
  return verdict(a.pass && b.pass, a.detail + "; " + b.detail);
}

Outcome elicitation_fidelity() {
  const auto& l = line("predictive_subsample_ks");
  return verdict(l.pass, l.detail);
}

// ---------------------------------------------------------------------------
// 3. Method of moments

Outcome moments_exactness() {
  const double a = 74.111, b = 266.202;
  const double mean = a / (a + b);
  const double var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  const BetaParams fit = fit_beta_moments(mean, var);
  const double rel = std::max(std::abs(fit.alpha - a) / a, std::abs(fit.beta - b) / b);

  Rng rng(20240601, "acceptance-moments");
  double worst = 0.0;
  std::size_t sets = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(2 + rng.below(300));
    const double centre = 0.02 + 0.96 * rng.uniform();
    const double spread = 0.001 + 0.2 * rng.uniform();
    for (double& x : s) x = std::clamp(centre + spread * rng.normal(), 1e-6, 1.0 - 1e-6);
    const auto m = sample_moments(s);
    if (!(m.variance > 0.0) || m.variance >= m.mean * (1.0 - m.mean)) continue;
    const BetaParams p = fit_beta_moments(s);
    worst = std::max({worst, std::abs(p.mean() - m.mean) / m.mean, std::abs(p.variance() - m.variance) / m.variance});
    ++sets;
  }
  return verdict(rel <= 1e-9 && worst <= 1e-9 && sets >= 900,
                 "Beta(74.111, 266.202) recovered with relative error " + fmt(rel, 17) +
                     "; worst fitted-vs-sample moment relative error " + fmt(worst, 17) + " over " +
                     std::to_string(sets) + " sample sets (<=1e-9)");
}

// ---------------------------------------------------------------------------
// 5. Diagnostics against a brute-force oracle

struct Hand {
  std::string id;
  Label truth;
  std::vector<double> samples;
};

std::vector<Hand> hand_cases() {
  const CsvTable t = read_csv(std::string(DMPRIOR_FIXTURES) + "/hand_cases.csv");
  std::vector<Hand> out;
  for (const auto& row : t.rows) {
    Hand h{row[0], row[1] == "1" ? Label::positive : Label::negative, {}};
    std::stringstream ss(row[2]);
    std::string item;
    while (std::getline(ss, item, ';')) h.samples.push_back(std::stod(item));
    out.push_back(std::move(h));
  }
  return out;
}

// Straight-line reimplementation of every metric, no shared helpers.
struct Brute {
  double mean, median, mode, lo, hi, above, h;
};

double type7(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= x.size()) return x.back();
  return x[k] + (pos - static_cast<double>(k)) * (x[k + 1] - x[k]);
}

double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

Brute brute(const Hand& c) {
  Brute b{};
  std::vector<double> sorted = c.samples;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double x : sorted) sum += x;
  b.mean = sum / static_cast<double>(sorted.size());
  b.median = type7(c.samples, 0.5);
  b.lo = type7(c.samples, 0.025);
  b.hi = type7(c.samples, 0.975);
  std::vector<std::vector<double>> bins(50);
  for (double x : sorted) bins[std::min<std::size_t>(49, static_cast<std::size_t>(x * 50))].push_back(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < 50; ++k)
    if (bins[k].size() > bins[best].size()) best = k;
  double bin_sum = 0.0;
  for (double x : bins[best]) bin_sum += x;
  b.mode = bin_sum / static_cast<double>(bins[best].size());
  std::size_t above = 0;
  for (double x : sorted) above += x > 0.5 ? 1 : 0;
  b.above = static_cast<double>(above) / static_cast<double>(sorted.size());
  b.h = h2(b.mean);
  return b;
}

Outcome diagnostics_oracle() {
  const auto cases = hand_cases();
  std::vector<CaseSummary> summaries;
  std::vector<Brute> oracle;
  std::vector<std::string> mismatches;
  auto check = [&](const std::string& what, double got, double want) {
    if (got != want) mismatches.push_back(what + " " + fmt(got, 17) + " != " + fmt(want, 17));
  };
  for (const auto& c : cases) {
    summaries.push_back(summarize_case(c.samples, c.truth, c.id));
    oracle.push_back(brute(c));
    const auto& s = summaries.back();
    const auto& b = oracle.back();
    check(c.id + ".mean", s.mean, b.mean);
    check(c.id + ".median", s.median, b.median);
    check(c.id + ".mode", s.mode, b.mode);
    check(c.id + ".ci_low", s.ci_low, b.lo);
    check(c.id + ".ci_high", s.ci_high, b.hi);
    check(c.id + ".above", s.above_mass, b.above);
    check(c.id + ".entropy", s.entropy, b.h);
  }
  const DiagnosticsReport r = diagnose(summaries);

  const double n = static_cast<double>(cases.size());
  auto positive = [](double v) { return v >= 0.5; };
  auto acc = [&](auto stat) {
    std::size_t right = 0;
    for (std::size_t i = 0; i < cases.size(); ++i)
      right += positive(stat(oracle[i])) == (cases[i].truth == Label::positive) ? 1 : 0;
    return 100.0 * static_cast<double>(right) / n;
  };
  check("mean_accuracy", r.mean_accuracy, acc([](const Brute& b) { return b.mean; }));
  check("mode_accuracy", r.mode_accuracy, acc([](const Brute& b) { return b.mode; }));
  check("median_accuracy", r.median_accuracy, acc([](const Brute& b) { return b.median; }));
  check("auc_accuracy", r.auc_accuracy, acc([](const Brute& b) { return b.above; }));

  std::size_t ci_right = 0, ci_half = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<std::size_t> cal_count(10, 0), cal_pos(10, 0);
  std::vector<double> cal_sum(10, 0.0);
  std::vector<std::size_t> ent_all(20, 0), ent_right(20, 0), ent_wrong(20, 0);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& b = oracle[i];
    const bool truth = cases[i].truth == Label::positive;
    const bool contains = b.lo <= 0.5 && 0.5 <= b.hi;
    if (contains || positive(b.lo) == truth) {
      ++ci_right;
      ci_half += contains ? 1 : 0;
    }
    const bool said = positive(b.mean);
    if (said && truth) ++tp;
    if (said && !truth) ++fp;
    if (!said && !truth) ++tn;
    if (!said && truth) ++fn;
    const auto cb = std::min<std::size_t>(9, static_cast<std::size_t>(b.mean * 10));
    ++cal_count[cb];
    cal_sum[cb] += b.mean;
    cal_pos[cb] += truth ? 1 : 0;
    const auto eb = std::min<std::size_t>(19, static_cast<std::size_t>(b.h * 20));
    ++ent_all[eb];
    ++(said == truth ? ent_right : ent_wrong)[eb];
  }
  check("ci_accuracy", r.ci.accuracy, 100.0 * static_cast<double>(ci_right) / n);
  check("ci_contains_half", r.ci.contains_half, 100.0 * static_cast<double>(ci_half) / static_cast<double>(ci_right));
  check("ci_one_sided", r.ci.one_sided,
        100.0 * static_cast<double>(ci_right - ci_half) / static_cast<double>(ci_right));
  const double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double spec = static_cast<double>(tn) / static_cast<double>(tn + fp);
  check("f_score", r.f_score, 2.0 * sens * spec / (sens + spec));
  check("tp", r.confusion.tp, 100.0 * static_cast<double>(tp) / n);
  check("fp", r.confusion.fp, 100.0 * static_cast<double>(fp) / n);
  check("tn", r.confusion.tn, 100.0 * static_cast<double>(tn) / n);
  check("fn", r.confusion.fn, 100.0 * static_cast<double>(fn) / n);
  for (std::size_t k = 0; k < 10; ++k) {
    check("calibration[" + std::to_string(k) + "].count", static_cast<double>(r.calibration[k].count),
          static_cast<double>(cal_count[k]));
    if (cal_count[k] == 0) {
      if (r.calibration[k].mean_predicted()) mismatches.push_back("calibration bin " + std::to_string(k) + " not empty");
      continue;
    }
    check("calibration[" + std::to_string(k) + "].predicted", r.calibration[k].mean_predicted().value_or(-1),
          cal_sum[k] / static_cast<double>(cal_count[k]));
    check("calibration[" + std::to_string(k) + "].observed", r.calibration[k].observed_fraction().value_or(-1),
          static_cast<double>(cal_pos[k]) / static_cast<double>(cal_count[k]));
  }
  if (r.entropy.all.counts != ent_all || r.entropy.correct.counts != ent_right ||
      r.entropy.incorrect.counts != ent_wrong)
    mismatches.push_back("entropy histograms");

  // The same numbers computed outside C++ and frozen with the fixture.
  const auto golden =
      nlohmann::json::parse(read_file(std::string(DMPRIOR_FIXTURES) + "/hand_report.json"));
  check("golden.mean_accuracy", r.mean_accuracy, golden["mean_accuracy"].get<double>());
  check("golden.ci_accuracy", r.ci.accuracy, golden["ci_accuracy"].get<double>());
  check("golden.auc_accuracy", r.auc_accuracy, golden["auc_accuracy"].get<double>());
  check("golden.f_score", r.f_score, golden["f_score"].get<double>());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& g = golden["summaries"][i];
    check("golden." + summaries[i].case_id + ".mode", summaries[i].mode, g["mode"].get<double>());
    check("golden." + summaries[i].case_id + ".median", summaries[i].median, g["median"].get<double>());
  }

  std::string detail = std::to_string(cases.size()) + " cases; mean/mode/median/AUC/CI accuracy " +
                       fmt(r.mean_accuracy, 1) + "/" + fmt(r.mode_accuracy, 1) + "/" + fmt(r.median_accuracy, 1) +
                       "/" + fmt(r.auc_accuracy, 1) + "/" + fmt(r.ci.accuracy, 1) + ", F " + fmt(r.f_score, 6);
  if (mismatches.empty()) return verdict(true, detail + "; every value equal to the oracle");
  detail += "; mismatches:";
  for (const auto& m : mismatches) detail += " " + m + ";";
  return verdict(false, detail);
}

// ---------------------------------------------------------------------------
// 6. Entropy

Outcome entropy_properties() {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = static_cast<double>(i) / 999.0;
    worst = std::max(worst, std::abs(binary_entropy(p) - binary_entropy(1.0 - p)));
  }
  const bool ends = binary_entropy(0.5) == 1.0 && binary_entropy(0.0) == 0.0 && binary_entropy(1.0) == 0.0;
  return verdict(ends && worst <= 1e-12, std::string("h(0.5)=1, h(0)=h(1)=0 ") + (ends ? "hold" : "violated") +
                                             "; max |h(p)-h(1-p)| " + fmt(worst, 17) + " over 1000 points");
}

// ---------------------------------------------------------------------------
// 7. Determinism

std::string pipeline_bytes() {
  Scenario s = recovery_scenario(derive_seed(20240601, "acceptance-determinism"), 1500);
  const SyntheticData data = generate(s);
  std::ostringstream out;
  write_csv(out, data.table);

  ProtocolConfig cfg;
  cfg.sampler = {.chains = 2, .iterations = 2000, .burn_in = 500, .seed = 11};
  cfg.plan = {.train_fraction = 0.8, .replicate_count = 2, .base_seed = 11};
  cfg.workers = workers();
  std::vector<FittedModel> models;
  const auto result = run_protocol(data.records, data.spec, cfg, &models);
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    out << result.replicates[r].partition_fingerprint << '\n';
    write_trace_csv(out, models[r].chains, models[r].column_names);
    out << to_json(result.replicates[r].report).dump() << '\n';
  }
  out << to_json(result.average).dump() << '\n';
  const std::vector<Family> families{Family::beta, Family::logit_normal};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto row = models[0].encoder.encode(data.records[i]);
    out << prior_json(elicit_prior(models[0].chains, row, 100, families, data.records[i].id), 11).dump() << '\n';
  }
  return out.str();
}

Outcome determinism() {
  const std::string a = pipeline_bytes();
  const std::string b = pipeline_bytes();
  return verdict(a == b, std::to_string(a.size()) + " bytes of data, draws, partitions, reports and priors; runs " +
                             (a == b ? "identical" : "differ"));
}

// ---------------------------------------------------------------------------
// 8. Parole data

Outcome parole() {
  const char* path = std::getenv("DMPRIOR_PAROLE_CSV");
  if (path == nullptr || !std::filesystem::exists(path))
    return {Verdict::skip, "dataset absent (set DMPRIOR_PAROLE_CSV to run)"};
  const TableSpec spec = load_table_spec(std::string(DMPRIOR_DEMO) + "/parole_columns.yaml");
  const LoadResult loaded = load_table(path, spec);
  ProtocolConfig cfg;
  cfg.sampler.seed = 20240601;
  cfg.plan = {.train_fraction = 0.8, .replicate_count = 5, .base_seed = 20240601};
  cfg.workers = workers();
  const std::vector<AblationSpec> ablations{{"no_ethnicity", {"ethnicity"}}};
  const auto report = ablate(loaded.records, spec, ablations, cfg);
  const auto& full = report.models[0];
  const auto& reduced = report.models[1];
  std::size_t lower = 0;
  for (std::size_t r = 0; r < full.replicates.size(); ++r)
    lower += reduced.replicates[r].mean_accuracy < full.replicates[r].mean_accuracy ? 1 : 0;
  const auto& a = full.average;
  const bool ok = std::abs(a.mean_accuracy - 79.5) <= 2.0 && std::abs(a.f_score - 0.867) <= 0.03 &&
                  std::abs(a.ci.accuracy - 84.5) <= 2.5 && lower >= 4;
  return verdict(ok, std::to_string(loaded.records.size()) + " records; mean accuracy " + fmt(a.mean_accuracy, 3) +
                         " (79.5+-2), F " + fmt(a.f_score) + " (0.867+-0.03), CI accuracy " +
                         fmt(a.ci.accuracy, 3) + " (84.5+-2.5); no-ethnicity lower in " + std::to_string(lower) +
                         "/5 splits (>=4)");
}

// ---------------------------------------------------------------------------
// 9. Runtime budget

/// 9580 rows, 35 design columns: nine numerics and four categoricals shaped
/// like the parole covariates (2, 4, 5 and 18 levels).
Scenario runtime_scenario() {
  Scenario s;
  s.n = 9580;
  s.seed = derive_seed(20240601, "acceptance-runtime");
  s.numeric_count = 9;
  std::vector<std::string> conviction;
  std::vector<double> conviction_p;
  for (int k = 0; k < 18; ++k) {
    conviction.push_back("c" + std::to_string(k));
    conviction_p.push_back(1.0 / 18.0);
  }
  s.categoricals = {{"gender", {"F", "M"}, {0.1, 0.9}},
                    {"ethnicity", {"Black", "Hispanic", "White", "Other"}, {0.45, 0.2, 0.3, 0.05}},
                    {"class", {"A", "B", "C", "D", "E"}, {0.1, 0.25, 0.25, 0.25, 0.15}},
                    {"conviction", conviction, conviction_p}};
  s.true_theta = {1.0, 0.3, -0.2, 0.5, -0.4, 0.1, 0.0, 0.25, -0.15, 0.05, 0.3, -0.2, 0.1, 0.15,
                  -0.3, -0.4, -0.5, -0.6};
  for (int k = 1; k < 18; ++k) s.true_theta.push_back(0.05 * static_cast<double>((k % 7) - 3));
  return s;
}

Outcome runtime_budget() {
  const Scenario s = runtime_scenario();
  const SyntheticData data = generate(s);
  ProtocolConfig cfg;  // default sampler: 4 chains x 20000 iterations, 5000 burn-in
  cfg.sampler.seed = 20240601;
  cfg.plan = {.train_fraction = 0.8, .replicate_count = 5, .base_seed = 20240601};
  cfg.workers = workers();
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_protocol(data.records, data.spec, cfg);
  const double elapsed = seconds_since(t0);
  const std::size_t train = result.replicates.front().train_size;
  return verdict(elapsed < 1800.0 && result.column_names.size() == 35 && train == 7664,
                 std::to_string(train) + "x" + std::to_string(result.column_names.size()) +
                     " training design, 5 splits, 4x20000 iterations: " + fmt(elapsed, 1) + " s on " +
                     std::to_string(cfg.workers) + " worker(s) (<1800 s); average mean accuracy " +
                     fmt(result.average.mean_accuracy, 2));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"sampler correctness", sampler_correctness},
      {"posterior recovery", posterior_recovery},
      {"method-of-moments exactness", moments_exactness},
      {"elicited-prior fidelity", elicitation_fidelity},
      {"diagnostics oracle equivalence", diagnostics_oracle},
      {"entropy endpoints and symmetry", entropy_properties},
      {"determinism", determinism},
      {"parole dataset figures", parole},
      {"runtime budget", runtime_budget}};
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  bool failed = false;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const std::size_t number = k + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("%s %zu %s: %s [%.1f s]\n", tag, number, criteria[k].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed = failed || o.verdict == Verdict::fail;
  }
  return failed ? 1 : 0;
}
