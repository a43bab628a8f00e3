#pragma once

// YAML-backed configuration: column specs, run configs and synthetic
// scenarios. Relative paths resolve against the config file's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "dmprior/analysis.hpp"
#include "dmprior/csv.hpp"
#include "dmprior/diagnostics.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/error.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/model.hpp"
#include "dmprior/sampler.hpp"
#include "dmprior/synthbench.hpp"

namespace dmprior {

namespace detail {

template <class T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
  if (!node || !node[key]) return fallback;
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw usage_error(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline ColumnKind parse_kind(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "date") return ColumnKind::date;
  if (s == "decision") return ColumnKind::decision;
  throw usage_error("config: unknown column kind '" + s + "'");
}

inline Family parse_family(const std::string& s) {
  const std::string u = upper(s);
  if (u == "BETA") return Family::beta;
  if (u == "LOGITNORMAL" || u == "LOGIT_NORMAL" || u == "LOGIT-NORMAL") return Family::logit_normal;
  throw usage_error("config: unknown distribution family '" + s + "'");
}

}  // namespace detail

inline ColumnSpec parse_column_spec(const YAML::Node& node) {
  ColumnSpec c;
  c.name = detail::get_or<std::string>(node, "name", "");
  c.kind = detail::parse_kind(detail::get_or<std::string>(node, "kind", "numeric"));
  c.source = detail::get_or<std::string>(node, "source", "");
  if (node["reference"]) c.reference = node["reference"].as<std::string>();
  if (node["fallback"]) c.fallback = node["fallback"].as<std::string>();
  c.levels = detail::get_or<std::vector<std::string>>(node, "levels", {});
  if (const auto map = node["map"]) {
    for (const auto& entry : map) {
      const auto level = entry["level"].as<std::string>();
      const auto patterns = detail::get_or<std::vector<std::string>>(entry, "patterns", {level});
      for (const auto& p : patterns) c.category_map.push_back({p, level});
    }
  }
  const auto format = detail::get_or<std::string>(node, "format", "plain");
  if (format == "years_months") c.numeric_format = NumericFormat::years_months;
  else if (format != "plain") throw usage_error("config: unknown numeric format '" + format + "'");
  c.anchor = detail::get_or<std::string>(node, "anchor", "");
  const auto direction = detail::get_or<std::string>(node, "direction", "since");
  if (direction == "until") c.direction = DateDirection::until;
  else if (direction != "since") throw usage_error("config: unknown date direction '" + direction + "'");
  c.clamp_negative = detail::get_or<bool>(node, "clamp_negative", true);
  if (node["positive"]) c.positive_labels = node["positive"].as<std::vector<std::string>>();
  if (node["negative"]) c.negative_labels = node["negative"].as<std::vector<std::string>>();
  return c;
}

inline TableSpec parse_table_spec(const YAML::Node& root) {
  TableSpec spec;
  spec.id_column = detail::get_or<std::string>(root, "id_column", "");
  if (!root["columns"] || !root["columns"].IsSequence())
    throw usage_error("column spec: 'columns' must be a list");
  for (const auto& node : root["columns"]) spec.columns.push_back(parse_column_spec(node));
  spec.validate();
  return spec;
}

inline YAML::Node load_yaml(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw usage_error("file not found: " + path.string());
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw usage_error("cannot parse " + path.string() + ": " + e.what());
  }
}

inline TableSpec load_table_spec(const std::filesystem::path& path) {
  return parse_table_spec(load_yaml(path));
}

/// YAML text that parse_table_spec reads back into an identical spec.
inline std::string table_spec_yaml(const TableSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (!spec.id_column.empty()) out << YAML::Key << "id_column" << YAML::Value << spec.id_column;
  out << YAML::Key << "columns" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : spec.columns) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    const char* kind = c.kind == ColumnKind::numeric       ? "numeric"
                       : c.kind == ColumnKind::categorical ? "categorical"
                       : c.kind == ColumnKind::date        ? "date"
                                                           : "decision";
    out << YAML::Key << "kind" << YAML::Value << kind;
    if (!c.source.empty()) out << YAML::Key << "source" << YAML::Value << c.source;
    switch (c.kind) {
      case ColumnKind::numeric:
        if (c.numeric_format == NumericFormat::years_months)
          out << YAML::Key << "format" << YAML::Value << "years_months";
        break;
      case ColumnKind::categorical:
        if (c.reference) out << YAML::Key << "reference" << YAML::Value << *c.reference;
        if (c.fallback) out << YAML::Key << "fallback" << YAML::Value << *c.fallback;
        if (!c.levels.empty())
          out << YAML::Key << "levels" << YAML::Value << YAML::Flow << c.levels;
        if (!c.category_map.empty()) {
          out << YAML::Key << "map" << YAML::Value << YAML::BeginSeq;
          for (const auto& rule : c.category_map)
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "level" << YAML::Value << rule.level
                << YAML::Key << "patterns" << YAML::Value << YAML::Flow
                << std::vector<std::string>{rule.pattern} << YAML::EndMap;
          out << YAML::EndSeq;
        }
        break;
      case ColumnKind::date:
        out << YAML::Key << "anchor" << YAML::Value << c.anchor;
        out << YAML::Key << "direction" << YAML::Value
            << (c.direction == DateDirection::since ? "since" : "until");
        out << YAML::Key << "clamp_negative" << YAML::Value << c.clamp_negative;
        break;
      case ColumnKind::decision:
        out << YAML::Key << "positive" << YAML::Value << YAML::Flow << c.positive_labels;
        out << YAML::Key << "negative" << YAML::Value << YAML::Flow << c.negative_labels;
        break;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline Scenario parse_scenario(const YAML::Node& node) {
  Scenario s;
  s.n = detail::get_or<std::size_t>(node, "n", 1000);
  s.seed = detail::get_or<std::uint64_t>(node, "seed", 0);
  s.numeric_count = detail::get_or<std::size_t>(node, "numeric", 0);
  s.true_theta = detail::get_or<std::vector<double>>(node, "true_theta", {});
  if (const auto cats = node["categoricals"]) {
    for (const auto& c : cats)
      s.categoricals.push_back({c["name"].as<std::string>(), c["levels"].as<std::vector<std::string>>(),
                                c["probabilities"].as<std::vector<double>>()});
  }
  s.validate();
  return s;
}

inline PriorSpec parse_prior(const YAML::Node& node) {
  PriorSpec p;
  p.mean = detail::get_or<double>(node, "mean", p.mean);
  const auto kind = detail::get_or<std::string>(node, "parameterization", "precision");
  if (kind == "variance") p.parameterization = ScaleParameterization::variance;
  else if (kind != "precision") throw usage_error("config: unknown prior parameterization '" + kind + "'");
  p.scale_value = detail::get_or<double>(node, "value", p.scale_value);
  p.validate();
  return p;
}

inline SamplerConfig parse_sampler(const YAML::Node& node, SamplerConfig s = {}) {
  s.chains = detail::get_or<std::size_t>(node, "chains", s.chains);
  s.iterations = detail::get_or<std::size_t>(node, "iterations", s.iterations);
  s.burn_in = detail::get_or<std::size_t>(node, "burn_in", s.burn_in);
  s.adapt_window = detail::get_or<std::size_t>(node, "adapt_window", s.adapt_window);
  s.target_acceptance = detail::get_or<double>(node, "target_acceptance", s.target_acceptance);
  s.validate();
  return s;
}

struct CounterfactualConfig {
  std::string attribute;
  std::vector<std::string> values;
};

struct RunConfig {
  std::filesystem::path path;
  std::string text;  // raw bytes, hashed into manifests
  std::filesystem::path data;
  std::filesystem::path columns;
  std::filesystem::path output = "out";
  std::optional<Scenario> scenario;  // synthetic data instead of `data`/`columns`
  bool scenario_seeded = false;      // scenario carries its own seed
  std::vector<std::string> variables;
  PriorSpec prior;
  SamplerConfig sampler;
  SplitPlan plan;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::size_t samples = 100;
  std::vector<Family> families{Family::beta, Family::logit_normal};
  DiagnosticsOptions diagnostics;
  bool fit_on_train = false;
  std::size_t fit_replicate = 0;
  std::vector<AblationSpec> ablations;
  std::vector<std::string> probe_cases;
  CounterfactualConfig counterfactual;
  BenchConfig bench;

  /// Pushes the single seed into every seeded component.
  void apply_seed() {
    if (!seed) throw usage_error("config: 'seed' is required");
    sampler.seed = *seed;
    plan.base_seed = *seed;
    bench.seed = *seed;
    bench.workers = workers;
    if (scenario && !scenario_seeded) scenario->seed = derive_seed(*seed, "scenario", 0);
  }
};

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const YAML::Node root = load_yaml(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  RunConfig c;
  c.path = path;
  c.text = read_file(path.string());
  if (root["seed"]) c.seed = detail::get_or<std::uint64_t>(root, "seed", 0);
  if (root["data"]) c.data = resolve(root["data"].as<std::string>());
  if (root["columns"]) c.columns = resolve(root["columns"].as<std::string>());
  if (root["output"]) c.output = resolve(root["output"].as<std::string>());
  if (root["scenario"]) {
    c.scenario = parse_scenario(root["scenario"]);
    c.scenario_seeded = static_cast<bool>(root["scenario"]["seed"]);
  }
  c.variables = detail::get_or<std::vector<std::string>>(root, "variables", {});
  if (root["prior"]) c.prior = parse_prior(root["prior"]);
  if (root["sampler"]) c.sampler = parse_sampler(root["sampler"]);
  if (const auto s = root["split"]) {
    c.plan.train_fraction = detail::get_or<double>(s, "train_fraction", c.plan.train_fraction);
    c.plan.replicate_count = detail::get_or<std::size_t>(s, "replicates", c.plan.replicate_count);
    c.plan.validate();
  }
  c.workers = detail::get_or<std::size_t>(root, "workers", c.workers);
  if (const auto e = root["elicit"]) {
    c.samples = detail::get_or<std::size_t>(e, "samples", c.samples);
    if (e["families"]) {
      c.families.clear();
      for (const auto& f : e["families"]) c.families.push_back(detail::parse_family(f.as<std::string>()));
    }
  }
  if (const auto d = root["diagnostics"]) {
    c.diagnostics.calibration_bins = detail::get_or<std::size_t>(d, "calibration_bins", c.diagnostics.calibration_bins);
    c.diagnostics.entropy_bins = detail::get_or<std::size_t>(d, "entropy_bins", c.diagnostics.entropy_bins);
    c.diagnostics.histogram_entropy = detail::get_or<bool>(d, "histogram_entropy", c.diagnostics.histogram_entropy);
  }
  if (const auto f = root["fit"]) {
    const auto on = detail::get_or<std::string>(f, "on", "full");
    if (on != "full" && on != "train") throw usage_error("config: fit.on must be 'full' or 'train'");
    c.fit_on_train = on == "train";
    c.fit_replicate = detail::get_or<std::size_t>(f, "replicate", 0);
  }
  if (const auto a = root["ablations"]) {
    for (const auto& entry : a)
      c.ablations.push_back({entry["name"].as<std::string>(),
                             entry["remove"].as<std::vector<std::string>>()});
  }
  c.probe_cases = detail::get_or<std::vector<std::string>>(root, "probe_cases", {});
  if (const auto cf = root["counterfactual"]) {
    c.counterfactual.attribute = detail::get_or<std::string>(cf, "attribute", "");
    c.counterfactual.values = detail::get_or<std::vector<std::string>>(cf, "values", {});
  }
  if (const auto b = root["bench"]) {
    auto& bc = c.bench;
    bc.recovery_replications = detail::get_or<std::size_t>(b, "recovery_replications", bc.recovery_replications);
    bc.recovery_n = detail::get_or<std::size_t>(b, "recovery_n", bc.recovery_n);
    bc.fidelity_trials = detail::get_or<std::size_t>(b, "fidelity_trials", bc.fidelity_trials);
    bc.fidelity_n = detail::get_or<std::size_t>(b, "fidelity_n", bc.fidelity_n);
    bc.oracle_draws = detail::get_or<std::size_t>(b, "oracle_draws", bc.oracle_draws);
    if (b["sampler"]) bc.sampler = parse_sampler(b["sampler"], bc.sampler);
  }
  bool has_data = !c.data.empty();
  if (has_data && !std::filesystem::exists(c.data))
    throw usage_error("data file not found: " + c.data.string());
  if (!c.columns.empty() && !std::filesystem::exists(c.columns))
    throw usage_error("column spec file not found: " + c.columns.string());
  if (has_data && c.columns.empty()) throw usage_error("config: 'columns' is required with 'data'");
  c.bench.prior = c.prior;
  c.bench.m = c.samples;
  return c;
}

}  // namespace dmprior
