// dmprior: fit, diagnose, elicit, ablate, counterfactual and bench from the
// command line. Every verb is driven by a YAML run config and writes plain
// files (JSON, CSV, SVG) into an output directory.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dmprior/config.hpp"
#include "dmprior/dmprior.hpp"

namespace fs = std::filesystem;
using namespace dmprior;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kBundleFormat = 1;

struct Options {
  std::string config;
  std::string out;
  std::string bundle;
  std::string cases;
  std::string attribute;
  std::vector<std::string> values;
  std::vector<std::string> case_ids;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> samples;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::internal, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

template <class Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_text(path, out.str());
}

Json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw usage_error("bundle file missing: " + path.string());
  try {
    return Json::parse(read_file(path.string()));
  } catch (const Json::exception& e) {
    throw data_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

/// File-name-safe version of a case id.
std::string safe_name(const std::string& id) {
  std::string out;
  for (char ch : id)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.') ? ch : '_';
  return out.empty() ? "case" : out;
}

// ---------------------------------------------------------------------------
// Configuration and inputs

RunConfig load_config(const Options& o) {
  if (o.config.empty()) throw usage_error("--config is required");
  if (!fs::exists(o.config)) throw usage_error("config file not found: " + o.config);
  RunConfig c = load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.replicates) c.plan.replicate_count = *o.replicates;
  if (o.samples) {
    c.samples = *o.samples;
    c.bench.m = *o.samples;
  }
  if (!o.out.empty()) c.output = o.out;
  if (c.workers == 0) throw usage_error("workers must be >= 1");
  if (c.samples == 0) throw usage_error("samples must be >= 1");
  c.plan.validate();
  c.apply_seed();
  return c;
}

ProtocolConfig protocol_config(const RunConfig& c) {
  return {c.prior, c.sampler, c.plan, c.samples, c.diagnostics, c.workers};
}

struct Inputs {
  TableSpec spec;
  std::string data_text;  // the CSV the records were read from
  std::vector<CaseRecord> records;
  std::size_t loaded = 0;
  std::size_t dropped_decision = 0;
  std::size_t incomplete = 0;
};

Inputs load_inputs(const RunConfig& c) {
  Inputs in;
  CsvTable table;
  if (c.scenario) {
    SyntheticData synth = generate(*c.scenario);
    in.spec = synth.spec;
    std::ostringstream csv;
    write_csv(csv, synth.table);
    in.data_text = csv.str();
    table = std::move(synth.table);
  } else {
    if (c.data.empty()) throw usage_error("config: either 'data' or 'scenario' is required");
    in.spec = load_table_spec(c.columns);
    in.data_text = read_file(c.data.string());
    table = parse_csv(in.data_text);
  }
  if (!c.variables.empty()) in.spec = in.spec.select(c.variables);
  const LoadResult loaded = load_table(table, in.spec);
  in.dropped_decision = loaded.dropped_decision;
  in.records = drop_incomplete(loaded.records, in.spec, &in.incomplete);
  in.loaded = loaded.records.size();
  if (in.records.size() < 2) throw data_error("fewer than two complete records after ingest");
  return in;
}

Json ingest_json(const Inputs& in) {
  return Json{{"rows_with_decision", in.loaded},
              {"dropped_unmapped_decision", in.dropped_decision},
              {"dropped_incomplete", in.incomplete},
              {"records", in.records.size()}};
}

Json prior_spec_json(const PriorSpec& p) {
  return Json{{"mean", p.mean},
              {"parameterization", p.parameterization == ScaleParameterization::precision ? "precision" : "variance"},
              {"value", p.scale_value}};
}

Json sampler_json(const SamplerConfig& s) {
  return Json{{"chains", s.chains},
              {"iterations", s.iterations},
              {"burn_in", s.burn_in},
              {"adapt_window", s.adapt_window},
              {"target_acceptance", s.target_acceptance},
              {"seed", s.seed}};
}

Json families_json(std::span<const Family> families) {
  Json out = Json::array();
  for (Family f : families) out.push_back(to_string(f));
  return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void report_convergence(const ConvergenceReport& r, const std::string& label) {
  for (const auto& issue : r.issues) std::cerr << "convergence" << label << ": " << issue << '\n';
}

// ---------------------------------------------------------------------------
// Model bundle

struct Bundle {
  fs::path dir;
  Json manifest;
  TableSpec spec;
  Encoder encoder;
  std::vector<std::string> column_names;
  std::vector<PosteriorChain> chains;
  std::uint64_t seed = 0;
  std::size_t samples = 100;
  std::vector<Family> families;
  SplitPlan plan;
  bool fit_on_train = false;
  std::size_t fit_replicate = 0;
  DiagnosticsOptions diagnostics;
};

Bundle read_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw usage_error("bundle directory not found: " + dir.string());
  Bundle b;
  b.dir = dir;
  b.manifest = read_json(dir / "manifest.json");
  if (b.manifest.value("format", 0) != kBundleFormat)
    throw data_error("bundle " + dir.string() + " has an unsupported format");
  b.spec = parse_table_spec(load_yaml(dir / "columns.yaml"));
  b.encoder = encoder_from_json(read_json(dir / "encoder.json"));
  b.column_names = b.encoder.column_names();
  const fs::path draws = dir / "draws.csv";
  if (!fs::exists(draws)) throw usage_error("bundle file missing: " + draws.string());
  b.chains = read_trace_csv(read_csv(draws.string()));
  if (b.chains.empty()) throw data_error("bundle has no draws");
  if (b.chains.front().dimension() != b.encoder.dimension())
    throw data_error("bundle draws do not match the encoder dimension");
  const Json chains = read_json(dir / "chains.json");
  for (std::size_t i = 0; i < b.chains.size() && i < chains.size(); ++i)
    b.chains[i].seed = chains[i].at("seed").get<std::uint64_t>();

  const Json& m = b.manifest;
  b.seed = m.at("seed").get<std::uint64_t>();
  b.samples = m.at("samples").get<std::size_t>();
  for (const auto& f : m.at("families")) b.families.push_back(detail::parse_family(f.get<std::string>()));
  b.plan.train_fraction = m.at("split").at("train_fraction").get<double>();
  b.plan.replicate_count = m.at("split").at("replicates").get<std::size_t>();
  b.plan.base_seed = b.seed;
  b.fit_on_train = m.at("fit").at("on").get<std::string>() == "train";
  b.fit_replicate = m.at("fit").at("replicate").get<std::size_t>();
  const Json& d = m.at("diagnostics");
  b.diagnostics.calibration_bins = d.at("calibration_bins").get<std::size_t>();
  b.diagnostics.entropy_bins = d.at("entropy_bins").get<std::size_t>();
  b.diagnostics.histogram_entropy = d.at("histogram_entropy").get<bool>();
  return b;
}

/// Reads a case file with the bundle's column spec. Labels are optional.
std::vector<CaseRecord> read_cases(const fs::path& path, const TableSpec& spec, bool require_decision) {
  if (!fs::exists(path)) throw usage_error("case file not found: " + path.string());
  LoadOptions opts;
  opts.require_decision = require_decision;
  const LoadResult loaded = load_table(path.string(), spec, opts);
  for (const auto& r : loaded.records) {
    if (r.complete(spec)) continue;
    std::string fields;
    for (const auto* c : spec.features()) {
      const auto it = r.features.find(c->name);
      if (it == r.features.end() || is_missing(it->second))
        fields += (fields.empty() ? "" : ", ") + c->name;
    }
    throw data_error("case '" + r.id + "' has missing or unparseable field(s): " + fields);
  }
  if (loaded.records.empty()) throw data_error("case file " + path.string() + " has no usable rows");
  return loaded.records;
}

std::vector<CaseRecord> select_cases(std::vector<CaseRecord> cases, const std::vector<std::string>& ids) {
  if (ids.empty()) return cases;
  std::vector<CaseRecord> out;
  for (const auto& id : ids) {
    auto it = std::find_if(cases.begin(), cases.end(), [&](const auto& r) { return r.id == id; });
    if (it == cases.end()) throw usage_error("case '" + id + "' not found in the case file");
    out.push_back(*it);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report writers

void write_diagnostics(const fs::path& dir, const std::string& name, const DiagnosticsReport& r) {
  write_json(dir / (name + ".json"), to_json(r));
  const std::vector<std::pair<std::string, DiagnosticsReport>> columns{{name, r}};
  write_with(dir / (name + "_table.csv"), [&](std::ostream& o) { write_accuracy_table_csv(o, columns); });
  write_with(dir / (name + "_confusion.csv"), [&](std::ostream& o) { write_confusion_csv(o, r); });
  write_with(dir / (name + "_calibration.csv"), [&](std::ostream& o) { write_calibration_csv(o, r.calibration); });
  write_with(dir / (name + "_entropy.csv"), [&](std::ostream& o) { write_entropy_csv(o, r.entropy); });
  write_text(dir / (name + "_calibration.svg"), calibration_svg(r.calibration));
  write_text(dir / (name + "_entropy_all.svg"), entropy_svg(r.entropy.all, "Entropy, all cases"));
  write_text(dir / (name + "_entropy_correct.svg"), entropy_svg(r.entropy.correct, "Entropy, correct"));
  write_text(dir / (name + "_entropy_incorrect.svg"), entropy_svg(r.entropy.incorrect, "Entropy, incorrect"));
}

/// Prior JSON, density and sample CSVs and an SVG for one case.
void write_prior_files(const fs::path& dir, const std::string& stem, const PredictiveSamples& predictive,
                       const FitReport& fit, std::uint64_t seed) {
  const ElicitedPrior& prior = fit.selected_prior();
  write_json(dir / (stem + ".json"), prior_json(fit, seed));
  write_with(dir / (stem + "_density.csv"),
             [&](std::ostream& o) { write_density_csv(o, prior, predictive.samples); });
  write_with(dir / (stem + "_samples.csv"), [&](std::ostream& o) { write_samples_csv(o, predictive); });

  std::vector<svg::Series> series(2);
  series[0].label = to_string(prior.family) + " fit";
  series[1].label = "kernel estimate";
  const double h = kde_bandwidth(predictive.samples);
  for (std::size_t i = 0; i < 200; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / 200.0;
    series[0].add(x, prior.pdf(x));
    series[1].add(x, kde(predictive.samples, h, x));
  }
  write_text(dir / (stem + ".svg"), svg::line_chart(series, "Elicited prior, case " + fit.case_id, "p", "density"));
}

// ---------------------------------------------------------------------------
// Verbs

int cmd_fit(const Options& o) {
  const RunConfig c = load_config(o);
  const Inputs in = load_inputs(c);

  std::vector<CaseRecord> train = in.records;
  SamplerConfig sampler = c.sampler;
  Json fit_info{{"on", c.fit_on_train ? "train" : "full"}, {"replicate", c.fit_replicate}};
  if (c.fit_on_train) {
    if (c.fit_replicate >= c.plan.replicate_count)
      throw usage_error("fit.replicate is outside the split plan");
    const Partition part = split(in.records.size(), c.plan, c.fit_replicate);
    train = gather<CaseRecord>(in.records, part.train);
    sampler = replicate_sampler(c.sampler, c.fit_replicate);
    fit_info["partition_fingerprint"] = hex(part.fingerprint());
    fit_info["test_size"] = part.test.size();
  }
  fit_info["train_size"] = train.size();

  const Provenance prov{c.fit_on_train ? static_cast<int>(c.fit_replicate) : -1, c.plan.base_seed};
  const EncodedDataset encoded = apply_encoder(fit_encoder(train, in.spec), train, prov);
  const FittedModel fitted = fit_model(encoded, c.prior, sampler, c.workers);

  const fs::path dir = c.output;
  fs::create_directories(dir);
  write_text(dir / "config.yaml", c.text);
  write_text(dir / "columns.yaml", table_spec_yaml(in.spec));
  write_text(dir / "data.csv", in.data_text);
  write_json(dir / "encoder.json", to_json(fitted.encoder));
  write_with(dir / "draws.csv", [&](std::ostream& out) { write_trace_csv(out, fitted.chains, fitted.column_names); });
  write_json(dir / "convergence.json", to_json(fitted.convergence));
  write_json(dir / "chains.json", chains_json(fitted.chains));
  const auto coefficients = coefficient_relevance(fitted.chains, fitted.column_names);
  write_with(dir / "coefficients.csv", [&](std::ostream& out) { write_coefficients_csv(out, coefficients); });

  Json manifest{{"tool", "dmprior"},
                {"version", kVersion},
                {"format", kBundleFormat},
                {"command", "fit"},
                {"config_hash", hex(fnv1a64(c.text))},
                {"seed", *c.seed},
                {"variables", c.variables},
                {"prior", prior_spec_json(c.prior)},
                {"sampler", sampler_json(sampler)},
                {"split", {{"train_fraction", c.plan.train_fraction}, {"replicates", c.plan.replicate_count}}},
                {"fit", fit_info},
                {"ingest", ingest_json(in)},
                {"samples", c.samples},
                {"families", families_json(c.families)},
                {"diagnostics",
                 {{"calibration_bins", c.diagnostics.calibration_bins},
                  {"entropy_bins", c.diagnostics.entropy_bins},
                  {"histogram_entropy", c.diagnostics.histogram_entropy}}},
                {"columns", fitted.column_names},
                {"convergence_flagged", fitted.convergence.flagged()},
                {"files",
                 {"config.yaml", "columns.yaml", "data.csv", "encoder.json", "draws.csv", "convergence.json",
                  "chains.json", "coefficients.csv"}}};
  write_json(dir / "manifest.json", manifest);

  print_warnings(encoded.warnings);
  std::cout << "fit: " << encoded.size() << " cases, " << fitted.column_names.size() << " coefficients, "
            << fitted.chains.size() << " chains -> " << dir.string() << '\n';
  if (fitted.convergence.flagged()) {
    report_convergence(fitted.convergence, "");
    return exit_code(ErrorKind::convergence);
  }
  return 0;
}

int diagnose_bundle(const Options& o) {
  const Bundle b = read_bundle(o.bundle);
  std::vector<CaseRecord> test;
  Json source;
  if (!o.cases.empty()) {
    test = read_cases(o.cases, b.spec, true);
    source = {{"cases", fs::path(o.cases).filename().string()}};
  } else {
    if (!b.fit_on_train)
      throw usage_error("bundle was fitted on the full data; pass --cases with a labelled test file");
    const LoadResult loaded = load_table(read_csv((b.dir / "data.csv").string()), b.spec);
    const auto records = drop_incomplete(loaded.records, b.spec);
    const Partition part = split(records.size(), b.plan, b.fit_replicate);
    if (hex(part.fingerprint()) != b.manifest.at("fit").at("partition_fingerprint").get<std::string>())
      throw data_error("bundle data no longer reproduces the fitted partition");
    test = gather<CaseRecord>(records, part.test);
    source = {{"replicate", b.fit_replicate}, {"partition_fingerprint", hex(part.fingerprint())}};
  }
  if (test.empty()) throw data_error("diagnose: test set is empty");
  const std::size_t m = o.samples.value_or(b.samples);
  const EncodedDataset data = apply_encoder(b.encoder, test);
  print_warnings(data.warnings);
  const SummaryOptions summary{b.diagnostics.histogram_entropy, b.diagnostics.entropy_bins};
  const DiagnosticsReport report = diagnose(summarize_dataset(b.chains, data, m, summary), b.diagnostics);

  const fs::path dir = o.out.empty() ? b.dir / "diagnostics" : fs::path(o.out);
  write_diagnostics(dir, "report", report);
  write_json(dir / "source.json", source);
  std::cout << "diagnose: " << data.size() << " test cases, mean accuracy "
            << format_double(report.mean_accuracy) << "% -> " << dir.string() << '\n';
  return 0;
}

int cmd_diagnose(const Options& o) {
  if (!o.bundle.empty()) return diagnose_bundle(o);
  const RunConfig c = load_config(o);
  const Inputs in = load_inputs(c);
  const ProtocolResult result = run_protocol(in.records, in.spec, protocol_config(c));

  const fs::path dir = c.output;
  bool flagged = false;
  Json replicates = Json::array();
  std::vector<std::pair<std::string, DiagnosticsReport>> columns;
  for (const auto& rep : result.replicates) {
    const std::string name = "replicate_" + std::to_string(rep.replicate);
    write_diagnostics(dir, name, rep.report);
    replicates.push_back({{"replicate", rep.replicate},
                          {"partition_fingerprint", hex(rep.partition_fingerprint)},
                          {"train_size", rep.train_size},
                          {"test_size", rep.test_size},
                          {"convergence", to_json(rep.convergence)}});
    columns.emplace_back(name, rep.report);
    print_warnings(rep.warnings);
    report_convergence(rep.convergence, " (" + name + ")");
    flagged = flagged || rep.convergence.flagged();
  }
  columns.emplace_back("average", result.average);
  write_diagnostics(dir, "average", result.average);
  write_with(dir / "table.csv", [&](std::ostream& out) { write_accuracy_table_csv(out, columns); });
  write_json(dir / "protocol.json", Json{{"tool", "dmprior"},
                                         {"version", kVersion},
                                         {"config_hash", hex(fnv1a64(c.text))},
                                         {"seed", *c.seed},
                                         {"ingest", ingest_json(in)},
                                         {"sampler", sampler_json(c.sampler)},
                                         {"samples", c.samples},
                                         {"columns", result.column_names},
                                         {"replicates", replicates}});
  std::cout << "diagnose: " << result.replicates.size() << " replicate(s), average mean accuracy "
            << format_double(result.average.mean_accuracy) << "% -> " << dir.string() << '\n';
  return flagged ? exit_code(ErrorKind::convergence) : 0;
}

int cmd_elicit(const Options& o) {
  if (o.bundle.empty()) throw usage_error("elicit: --bundle is required");
  if (o.cases.empty()) throw usage_error("elicit: --cases is required");
  const Bundle b = read_bundle(o.bundle);
  const std::size_t m = o.samples.value_or(b.samples);
  const auto cases = select_cases(read_cases(o.cases, b.spec, false), o.case_ids);

  const fs::path dir = o.out.empty() ? b.dir / "priors" : fs::path(o.out);
  Json index = Json::array();
  std::set<std::string> stems;
  for (const auto& record : cases) {
    std::vector<std::string> warnings;
    const auto row = b.encoder.encode(record, &warnings);
    print_warnings(warnings);
    const auto predictive = predictive_samples(b.chains, row, m, record.id);
    const FitReport fit = fit_families(predictive, b.families);
    std::string stem = safe_name(record.id);
    if (!stems.insert(stem).second) throw data_error("duplicate case id '" + record.id + "'");
    write_prior_files(dir, stem, predictive, fit, b.seed);
    const auto& chosen = fit.selected_prior();
    index.push_back({{"case_id", record.id}, {"file", stem + ".json"}, {"family", to_string(chosen.family)},
                     {"mean", fit.moments.mean}});
    std::cout << record.id << ": " << to_string(chosen.family) << "(" << format_double(chosen.params[0]) << ", "
              << format_double(chosen.params[1]) << "), mean " << format_double(fit.moments.mean) << '\n';
  }
  write_json(dir / "index.json", index);
  return 0;
}

int cmd_counterfactual(const Options& o) {
  if (o.bundle.empty()) throw usage_error("counterfactual: --bundle is required");
  if (o.cases.empty()) throw usage_error("counterfactual: --cases is required");
  const Bundle b = read_bundle(o.bundle);
  std::string attribute = o.attribute;
  std::vector<std::string> values = o.values;
  if (!o.config.empty()) {
    const RunConfig c = load_run_config(o.config);
    if (attribute.empty()) attribute = c.counterfactual.attribute;
    if (values.empty()) values = c.counterfactual.values;
  }
  if (attribute.empty()) throw usage_error("counterfactual: --attribute is required");
  if (values.empty()) throw usage_error("counterfactual: --values is required");
  const std::size_t m = o.samples.value_or(b.samples);
  const auto cases = select_cases(read_cases(o.cases, b.spec, false), o.case_ids);

  const fs::path dir = o.out.empty() ? b.dir / "counterfactual" : fs::path(o.out);
  Json summary = Json::array();
  for (const auto& record : cases) {
    const auto results = counterfactual(b.chains, b.encoder, record, attribute, values, m, b.families);
    const std::string stem = safe_name(record.id);
    Json entries = Json::array();
    std::vector<svg::Series> series;
    for (const auto& r : results) {
      const std::string file = stem + "__" + safe_name(attribute) + "=" + safe_name(r.value);
      write_prior_files(dir, file, r.samples, r.fit, b.seed);
      entries.push_back({{"value", r.value}, {"file", file + ".json"}, {"mean", r.fit.moments.mean}});
      svg::Series s;
      s.label = attribute + " = " + r.value;
      for (std::size_t i = 0; i < 200; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / 200.0;
        s.add(x, r.fit.selected_prior().pdf(x));
      }
      series.push_back(std::move(s));
    }
    write_with(dir / (stem + "_overlay.csv"), [&](std::ostream& out) {
      out << "x";
      for (const auto& r : results) out << ',' << csv_escape(r.value);
      out << '\n';
      for (std::size_t i = 0; i < 500; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / 500.0;
        out << format_double(x);
        for (const auto& r : results) out << ',' << format_double(r.fit.selected_prior().pdf(x));
        out << '\n';
      }
    });
    write_text(dir / (stem + "_overlay.svg"),
               svg::line_chart(series, "Counterfactual " + attribute + ", case " + record.id, "p", "density"));
    summary.push_back({{"case_id", record.id}, {"attribute", attribute}, {"priors", entries}});
    for (const auto& r : results)
      std::cout << record.id << " " << attribute << "=" << r.value << ": mean " << format_double(r.fit.moments.mean)
                << '\n';
  }
  write_json(dir / "counterfactual.json", summary);
  return 0;
}

int cmd_ablate(const Options& o) {
  const RunConfig c = load_config(o);
  if (c.ablations.empty()) throw usage_error("ablate: config has no 'ablations'");
  const Inputs in = load_inputs(c);
  const ComparativeReport report =
      ablate(in.records, in.spec, c.ablations, protocol_config(c), c.probe_cases, c.families);

  const fs::path dir = c.output;
  write_json(dir / "comparative.json", to_json(report, *c.seed));
  std::vector<std::pair<std::string, DiagnosticsReport>> columns;
  for (const auto& model : report.models) columns.emplace_back(model.name, model.average);
  write_with(dir / "comparative.csv", [&](std::ostream& out) { write_accuracy_table_csv(out, columns); });

  for (std::size_t p = 0; p < c.probe_cases.size(); ++p) {
    std::vector<svg::Series> series;
    const std::string stem = "probe_" + safe_name(c.probe_cases[p]);
    write_with(dir / (stem + ".csv"), [&](std::ostream& out) {
      out << "x";
      for (const auto& model : report.models) out << ',' << csv_escape(model.name);
      out << '\n';
      for (std::size_t i = 0; i < 500; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / 500.0;
        out << format_double(x);
        for (const auto& model : report.models)
          out << ',' << format_double(model.probes[p].fit.selected_prior().pdf(x));
        out << '\n';
      }
    });
    for (const auto& model : report.models) {
      svg::Series s;
      s.label = model.name;
      for (std::size_t i = 0; i < 200; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / 200.0;
        s.add(x, model.probes[p].fit.selected_prior().pdf(x));
      }
      series.push_back(std::move(s));
    }
    write_text(dir / (stem + ".svg"), svg::line_chart(series, "Elicited prior, case " + c.probe_cases[p], "p", "density"));
  }
  for (const auto& model : report.models)
    std::cout << model.name << ": mean accuracy " << format_double(model.average.mean_accuracy) << "%\n";
  return 0;
}

int cmd_bench(const Options& o) {
  BenchConfig bench;
  std::uint64_t seed = 0;
  if (!o.config.empty()) {
    const RunConfig c = load_config(o);
    bench = c.bench;
    seed = *c.seed;
  } else {
    if (!o.seed) throw usage_error("bench: --seed or --config is required");
    seed = *o.seed;
    bench.seed = seed;
    bench.workers = o.workers.value_or(1);
    if (o.samples) bench.m = *o.samples;
  }
  const auto lines = run_bench(bench);
  bool ok = true;
  Json j = Json::array();
  for (const auto& line : lines) {
    std::cout << (line.pass ? "PASS " : "FAIL ") << line.property << ": " << line.detail << '\n';
    j.push_back({{"property", line.property}, {"pass", line.pass}, {"detail", line.detail}});
    ok = ok && line.pass;
  }
  if (!o.out.empty()) write_json(fs::path(o.out) / "bench.json", Json{{"seed", seed}, {"properties", j}});
  return ok ? 0 : exit_code(ErrorKind::internal);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-model prior elicitation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool bundle) {
    sub->add_option("--config", o.config, "YAML run config");
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_option("--seed", o.seed, "seed (overrides the config)");
    sub->add_option("--workers", o.workers, "worker threads");
    sub->add_option("--replicates", o.replicates, "number of train/test replicates");
    sub->add_option("--samples", o.samples, "predictive samples per case");
    if (bundle) {
      sub->add_option("--bundle", o.bundle, "model bundle directory written by 'fit'");
      sub->add_option("--cases", o.cases, "CSV file of cases");
      sub->add_option("--case", o.case_ids, "restrict to these case ids");
    }
  };
  auto* fit = app.add_subcommand("fit", "fit the model and write a bundle");
  common(fit, false);
  auto* diag = app.add_subcommand("diagnose", "run the replicate protocol, or score a bundle");
  common(diag, true);
  auto* elicit = app.add_subcommand("elicit", "elicit priors for new cases");
  common(elicit, true);
  auto* abl = app.add_subcommand("ablate", "compare the full model with reduced models");
  common(abl, false);
  auto* cf = app.add_subcommand("counterfactual", "re-elicit while varying one attribute");
  common(cf, true);
  cf->add_option("--attribute", o.attribute, "attribute to vary");
  cf->add_option("--values", o.values, "values to try")->delimiter(',');
  auto* bench = app.add_subcommand("bench", "synthetic ground-truth checks");
  common(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::usage);
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*diag) return cmd_diagnose(o);
    if (*elicit) return cmd_elicit(o);
    if (*abl) return cmd_ablate(o);
    if (*cf) return cmd_counterfactual(o);
    if (*bench) return cmd_bench(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const YAML::Exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return exit_code(ErrorKind::usage);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return exit_code(ErrorKind::internal);
  }
  return exit_code(ErrorKind::usage);
}
