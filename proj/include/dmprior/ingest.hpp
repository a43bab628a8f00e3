#pragma once

// Decision-history ingestion: raw CSV rows -> typed case records -> a
// standardized, dummy-encoded design matrix with binary responses.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dmprior/csv.hpp"
#include "dmprior/error.hpp"
#include "dmprior/matrix.hpp"
#include "dmprior/rng.hpp"

namespace dmprior {

enum class ColumnKind { numeric, categorical, date, decision };

/// Binary decision. `positive` is coded 1 in the response vector.
enum class Label : std::uint8_t { negative = 0, positive = 1 };

/// `years_months` reads "YYYY-MM" durations (e.g. "0003-06" is 3.5 years).
enum class NumericFormat { plain, years_months };

/// since: anchor - source (e.g. age at interview). until: source - anchor
/// (e.g. years from interview to release).
enum class DateDirection { since, until };

struct CategoryRule {
  std::string pattern;  // case-insensitive substring of the raw value
  std::string level;
};

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::string source;  // raw CSV column; empty means `name`

  // categorical
  std::vector<CategoryRule> category_map;  // first matching rule wins
  std::optional<std::string> fallback;
  std::optional<std::string> reference;
  std::vector<std::string> levels;  // preferred dummy order

  // numeric
  NumericFormat numeric_format = NumericFormat::plain;

  // date: feature value is a year difference against `anchor`
  std::string anchor;
  DateDirection direction = DateDirection::since;
  bool clamp_negative = true;

  // decision
  std::vector<std::string> positive_labels = {"Denied", "Not Granted"};
  std::vector<std::string> negative_labels = {"Open Date", "Granted", "Paroled"};

  const std::string& source_column() const { return source.empty() ? name : source; }
  bool is_feature() const { return kind != ColumnKind::decision; }
  bool is_categorical() const { return kind == ColumnKind::categorical; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) { return upper(a) == upper(b); }

}  // namespace detail

struct TableSpec {
  std::string id_column;  // empty: ids are 1-based data row numbers
  std::vector<ColumnSpec> columns;

  const ColumnSpec* find(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  const ColumnSpec& decision() const {
    for (const auto& c : columns)
      if (c.kind == ColumnKind::decision) return c;
    throw usage_error("column spec has no decision column");
  }

  std::vector<const ColumnSpec*> features() const {
    std::vector<const ColumnSpec*> out;
    for (const auto& c : columns)
      if (c.is_feature()) out.push_back(&c);
    return out;
  }

  void validate() const {
    std::size_t decisions = 0;
    std::set<std::string> names;
    for (const auto& c : columns) {
      if (c.name.empty()) throw usage_error("column spec with empty name");
      if (!names.insert(c.name).second) throw usage_error("duplicate column spec: " + c.name);
      if (c.kind == ColumnKind::decision) ++decisions;
      if (c.kind == ColumnKind::date && c.anchor.empty())
        throw usage_error("date column '" + c.name + "' needs an anchor column");
      std::set<std::string> patterns;
      for (const auto& rule : c.category_map)
        if (!patterns.insert(detail::upper(rule.pattern)).second)
          throw usage_error("column '" + c.name + "': duplicate category pattern '" +
                            rule.pattern + "'");
    }
    if (decisions != 1)
      throw usage_error("column spec must declare exactly one decision column, found " +
                        std::to_string(decisions));
  }

  /// Copy keeping the decision column and only the named features, in
  /// declared order. Unknown names are an error.
  TableSpec select(std::span<const std::string> keep) const {
    for (const auto& name : keep) {
      const auto* c = find(name);
      if (c == nullptr || !c->is_feature()) throw usage_error("unknown model variable: " + name);
    }
    TableSpec out{id_column, {}};
    for (const auto& c : columns)
      if (!c.is_feature() || std::find(keep.begin(), keep.end(), c.name) != keep.end())
        out.columns.push_back(c);
    return out;
  }

  /// Copy with the named feature groups removed.
  TableSpec without(std::span<const std::string> removed) const {
    for (const auto& name : removed) {
      const auto* c = find(name);
      if (c == nullptr || !c->is_feature()) throw usage_error("unknown variable group: " + name);
    }
    TableSpec out{id_column, {}};
    for (const auto& c : columns)
      if (!c.is_feature() || std::find(removed.begin(), removed.end(), c.name) == removed.end())
        out.columns.push_back(c);
    return out;
  }
};

using FeatureValue = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const FeatureValue& v) { return std::holds_alternative<std::monostate>(v); }

struct CaseRecord {
  std::string id;
  std::map<std::string, FeatureValue, std::less<>> features;
  Label decision = Label::negative;
  std::vector<std::string> flags;

  bool complete(const TableSpec& spec) const {
    for (const auto* c : spec.features()) {
      auto it = features.find(c->name);
      if (it == features.end() || is_missing(it->second)) return false;
    }
    return true;
  }
};

using RawRow = std::map<std::string, std::string, std::less<>>;

// ---------------------------------------------------------------------------
// Field-level conversions

inline std::optional<Label> binarize_decision(std::string_view raw, const ColumnSpec& decision) {
  const std::string value = detail::trim(raw);
  for (const auto& label : decision.positive_labels)
    if (detail::iequals(value, label)) return Label::positive;
  for (const auto& label : decision.negative_labels)
    if (detail::iequals(value, label)) return Label::negative;
  return std::nullopt;
}

inline std::optional<Label> binarize_decision(std::string_view raw) {
  static const ColumnSpec defaults{.name = "decision", .kind = ColumnKind::decision};
  return binarize_decision(raw, defaults);
}

/// Maps a raw categorical value onto its simplified level. Returns nullopt
/// for an empty (missing) value.
inline std::optional<std::string> simplify_category(std::string_view raw, const ColumnSpec& spec) {
  const std::string value = detail::trim(raw);
  if (value.empty()) return std::nullopt;
  if (spec.category_map.empty()) return value;
  const std::string key = detail::upper(value);
  for (const auto& rule : spec.category_map)
    if (detail::upper(rule.level) == key) return rule.level;
  for (const auto& rule : spec.category_map)
    if (key.find(detail::upper(rule.pattern)) != std::string::npos) return rule.level;
  if (spec.fallback) return *spec.fallback;
  return value;
}

/// Accepts YYYY-MM-DD, YYYY/MM/DD and MM/DD/YYYY, ignoring any trailing time.
inline std::optional<std::chrono::sys_days> parse_date(std::string_view text) {
  const std::string s = detail::trim(text);
  const std::string date = s.substr(0, s.find_first_of(" T"));
  int a = 0, b = 0, c = 0;
  char s1 = 0, s2 = 0;
  int consumed = 0;
  if (std::sscanf(date.c_str(), "%d%c%d%c%d%n", &a, &s1, &b, &s2, &c, &consumed) != 5 ||
      static_cast<std::size_t>(consumed) != date.size() || s1 != s2 || (s1 != '-' && s1 != '/'))
    return std::nullopt;
  int y = a, m = b, d = c;
  if (a < 100) {  // MM/DD/YYYY
    if (s1 != '/') return std::nullopt;
    m = a;
    d = b;
    y = c;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

inline constexpr double kDaysPerYear = 365.25;

inline double years_between(std::chrono::sys_days from, std::chrono::sys_days to) {
  return static_cast<double>((to - from).count()) / kDaysPerYear;
}

inline std::optional<double> parse_numeric(std::string_view raw, NumericFormat format) {
  if (format == NumericFormat::years_months) {
    const std::string s = detail::trim(raw);
    const auto dash = s.find('-', 1);
    if (dash != std::string::npos) {
      const auto years = parse_double(std::string_view(s).substr(0, dash));
      const auto months = parse_double(std::string_view(s).substr(dash + 1));
      if (!years || !months) return std::nullopt;
      return *years + *months / 12.0;
    }
  }
  return parse_double(raw);
}

namespace detail {

inline const std::string& raw_field(const RawRow& raw, const std::string& column) {
  static const std::string empty;
  auto it = raw.find(column);
  return it == raw.end() ? empty : it->second;
}

}  // namespace detail

/// Computes the typed feature values of one raw row: numeric parsing, date
/// differences in years, category simplification. Unparseable values are
/// recorded as missing; negative date intervals are clamped to 0 and flagged.
inline CaseRecord derive_features(const RawRow& raw, const TableSpec& spec) {
  CaseRecord record;
  for (const auto* c : spec.features()) {
    FeatureValue value;
    const std::string& field = detail::raw_field(raw, c->source_column());
    switch (c->kind) {
      case ColumnKind::numeric:
        if (auto v = parse_numeric(field, c->numeric_format)) value = *v;
        break;
      case ColumnKind::categorical:
        if (auto level = simplify_category(field, *c)) value = std::move(*level);
        break;
      case ColumnKind::date: {
        const auto at = parse_date(field);
        const auto anchor = parse_date(detail::raw_field(raw, c->anchor));
        if (!at || !anchor) break;
        double years = c->direction == DateDirection::since ? years_between(*at, *anchor)
                                                            : years_between(*anchor, *at);
        if (years < 0.0 && c->clamp_negative) {
          record.flags.push_back(c->name + ": negative interval clamped to 0");
          years = 0.0;
        }
        value = years;
        break;
      }
      case ColumnKind::decision:
        break;
    }
    record.features.emplace(c->name, std::move(value));
  }
  return record;
}

// ---------------------------------------------------------------------------
// Table loading

struct LoadOptions {
  bool require_decision = true;
};

struct LoadResult {
  std::vector<CaseRecord> records;
  std::size_t dropped_decision = 0;  // rows whose decision label is not in the map
  std::size_t incomplete = 0;        // kept rows with at least one missing feature
};

inline LoadResult load_table(const CsvTable& table, const TableSpec& spec,
                             const LoadOptions& options = {}) {
  spec.validate();
  const ColumnSpec& decision = spec.decision();

  std::vector<std::string> needed;
  if (!spec.id_column.empty()) needed.push_back(spec.id_column);
  if (options.require_decision) needed.push_back(decision.source_column());
  for (const auto* c : spec.features()) {
    needed.push_back(c->source_column());
    if (c->kind == ColumnKind::date) needed.push_back(c->anchor);
  }
  std::vector<std::string> missing;
  for (const auto& col : needed)
    if (!table.column_index(col) &&
        std::find(missing.begin(), missing.end(), col) == missing.end())
      missing.push_back(col);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw data_error("missing declared column(s): " + list);
  }

  LoadResult result;
  const auto decision_index = table.column_index(decision.source_column());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    RawRow raw;
    for (std::size_t i = 0; i < table.header.size(); ++i)
      raw.emplace(table.header[i], i < row.size() ? row[i] : std::string());

    std::optional<Label> label;
    if (decision_index && *decision_index < row.size())
      label = binarize_decision(row[*decision_index], decision);
    if (!label && options.require_decision) {
      ++result.dropped_decision;
      continue;
    }

    CaseRecord record = derive_features(raw, spec);
    record.id = spec.id_column.empty() ? std::to_string(r + 1)
                                       : detail::trim(detail::raw_field(raw, spec.id_column));
    record.decision = label.value_or(Label::negative);
    if (!record.complete(spec)) ++result.incomplete;
    result.records.push_back(std::move(record));
  }
  return result;
}

inline LoadResult load_table(const std::string& path, const TableSpec& spec,
                             const LoadOptions& options = {}) {
  return load_table(read_csv(path), spec, options);
}

/// Rows with missing features are dropped rather than imputed.
inline std::vector<CaseRecord> drop_incomplete(std::span<const CaseRecord> records,
                                               const TableSpec& spec,
                                               std::size_t* dropped = nullptr) {
  std::vector<CaseRecord> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (r.complete(spec)) out.push_back(r);
  if (dropped) *dropped = records.size() - out.size();
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

struct FeatureEncoding {
  std::string name;
  bool categorical = false;
  double mean = 0.0;  // numeric: training mean
  double sd = 1.0;    // numeric: training population standard deviation
  std::string reference;
  std::vector<std::string> levels;  // categorical: non-reference levels in dummy order
  std::size_t first_column = 0;

  std::size_t width() const { return categorical ? levels.size() : 1; }
};

inline constexpr std::string_view kInterceptName = "(Intercept)";

class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(std::vector<FeatureEncoding> features) : features_(std::move(features)) {
    std::size_t column = 1;
    for (auto& f : features_) {
      f.first_column = column;
      column += f.width();
    }
  }

  const std::vector<FeatureEncoding>& features() const { return features_; }

  /// Design width including the intercept column.
  std::size_t dimension() const {
    std::size_t d = 1;
    for (const auto& f : features_) d += f.width();
    return d;
  }

  const FeatureEncoding* find(std::string_view name) const {
    for (const auto& f : features_)
      if (f.name == name) return &f;
    return nullptr;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names{std::string(kInterceptName)};
    for (const auto& f : features_) {
      if (!f.categorical) {
        names.push_back(f.name);
      } else {
        for (const auto& level : f.levels) names.push_back(f.name + "_" + level);
      }
    }
    return names;
  }

  /// Encodes one complete record. A categorical level not seen in training
  /// is encoded as the reference level and reported through `warnings`.
  std::vector<double> encode(const CaseRecord& record,
                             std::vector<std::string>* warnings = nullptr) const {
    std::vector<double> row(dimension(), 0.0);
    row[0] = 1.0;
    for (const auto& f : features_) {
      auto it = record.features.find(f.name);
      if (it == record.features.end() || is_missing(it->second))
        throw data_error("case '" + record.id + "': missing value for '" + f.name + "'");
      if (!f.categorical) {
        const double* v = std::get_if<double>(&it->second);
        if (v == nullptr)
          throw data_error("case '" + record.id + "': '" + f.name + "' is not numeric");
        row[f.first_column] = (*v - f.mean) / f.sd;
        continue;
      }
      const std::string* level = std::get_if<std::string>(&it->second);
      if (level == nullptr)
        throw data_error("case '" + record.id + "': '" + f.name + "' is not categorical");
      if (*level == f.reference) continue;
      auto pos = std::find(f.levels.begin(), f.levels.end(), *level);
      if (pos == f.levels.end()) {
        if (warnings)
          warnings->push_back("case '" + record.id + "': level '" + *level + "' of '" + f.name +
                              "' unseen in training; encoded as reference '" + f.reference + "'");
        continue;
      }
      row[f.first_column + static_cast<std::size_t>(pos - f.levels.begin())] = 1.0;
    }
    return row;
  }

  /// Recovers a numeric feature's natural-unit value from an encoded row.
  double decode(std::string_view feature, std::span<const double> row) const {
    const auto* f = find(feature);
    if (f == nullptr || f->categorical)
      throw usage_error("decode: not a numeric feature: " + std::string(feature));
    return row[f->first_column] * f->sd + f->mean;
  }

 private:
  std::vector<FeatureEncoding> features_;
};

/// Learns standardization statistics and dummy layouts from training rows.
inline Encoder fit_encoder(std::span<const CaseRecord> train, const TableSpec& spec) {
  if (train.empty()) throw data_error("encode: training set is empty");
  std::vector<FeatureEncoding> features;
  for (const auto* c : spec.features()) {
    FeatureEncoding f;
    f.name = c->name;
    if (!c->is_categorical()) {
      double sum = 0.0;
      for (const auto& r : train) {
        const auto& v = r.features.at(c->name);
        if (!std::holds_alternative<double>(v))
          throw data_error("encode: case '" + r.id + "' has no numeric value for '" + c->name + "'");
        sum += std::get<double>(v);
      }
      const double n = static_cast<double>(train.size());
      f.mean = sum / n;
      double ss = 0.0;
      for (const auto& r : train) {
        const double dev = std::get<double>(r.features.at(c->name)) - f.mean;
        ss += dev * dev;
      }
      f.sd = std::sqrt(ss / n);
      if (!(f.sd > 0.0)) throw data_error("encode: zero-variance numeric column '" + c->name + "'");
    } else {
      f.categorical = true;
      std::set<std::string> observed;
      for (const auto& r : train) {
        const auto& v = r.features.at(c->name);
        if (!std::holds_alternative<std::string>(v))
          throw data_error("encode: case '" + r.id + "' has no level for '" + c->name + "'");
        observed.insert(std::get<std::string>(v));
      }
      std::vector<std::string> order;
      for (const auto& level : c->levels)
        if (observed.erase(level)) order.push_back(level);
      order.insert(order.end(), observed.begin(), observed.end());
      if (c->reference) {
        auto pos = std::find(order.begin(), order.end(), *c->reference);
        if (pos == order.end())
          throw data_error("encode: reference level '" + *c->reference + "' of '" + c->name +
                           "' does not occur in the training rows");
        f.reference = *pos;
        order.erase(pos);
      } else {
        f.reference = order.front();
        order.erase(order.begin());
      }
      f.levels = std::move(order);
    }
    features.push_back(std::move(f));
  }
  return Encoder(std::move(features));
}

struct Provenance {
  int split = -1;  // replicate index, -1 for the full data set
  std::uint64_t seed = 0;
};

struct EncodedDataset {
  Matrix design;
  std::vector<std::uint8_t> response;
  std::vector<std::string> ids;
  Encoder encoder;
  Provenance provenance;
  std::vector<std::string> warnings;

  std::size_t size() const { return response.size(); }
};

inline EncodedDataset apply_encoder(const Encoder& encoder, std::span<const CaseRecord> records,
                                    Provenance provenance = {}) {
  EncodedDataset out;
  out.encoder = encoder;
  out.provenance = provenance;
  out.design = Matrix(0, 0);
  for (const auto& r : records) {
    const auto row = encoder.encode(r, &out.warnings);
    out.design.push_row(row);
    out.response.push_back(static_cast<std::uint8_t>(r.decision));
    out.ids.push_back(r.id);
  }
  if (records.empty()) out.design = Matrix(0, encoder.dimension());
  return out;
}

/// Encoder statistics come from `train` only and are applied to both sets.
inline std::pair<EncodedDataset, EncodedDataset> encode(std::span<const CaseRecord> train,
                                                        std::span<const CaseRecord> test,
                                                        const TableSpec& spec,
                                                        Provenance provenance = {}) {
  const Encoder encoder = fit_encoder(train, spec);
  return {apply_encoder(encoder, train, provenance), apply_encoder(encoder, test, provenance)};
}

inline void write_encoded_csv(std::ostream& out, const EncodedDataset& data) {
  out << "id,response";
  for (const auto& name : data.encoder.column_names()) out << ',' << csv_escape(name);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << csv_escape(data.ids[i]) << ',' << static_cast<int>(data.response[i]);
    for (double v : data.design.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Train/test splitting

struct SplitPlan {
  double train_fraction = 0.8;
  std::size_t replicate_count = 5;
  std::uint64_t base_seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw usage_error("split: train_fraction must lie in (0, 1)");
    if (replicate_count < 1) throw usage_error("split: replicate_count must be >= 1");
  }

  /// ceil(train_fraction * n), tolerant of representation error in the
  /// product (0.8 * 9580 must give 7664, not 7665).
  std::size_t train_size(std::size_t n) const {
    const double exact = train_fraction * static_cast<double>(n);
    const double nearest = std::round(exact);
    const double count =
        std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
    return static_cast<std::size_t>(count);
  }
};

struct Partition {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;   // ascending row indices

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a64("partition");
    for (auto i : train) h = splitmix64(h ^ i);
    h = splitmix64(h ^ 0xFFFFFFFFFFFFFFFFULL);
    for (auto i : test) h = splitmix64(h ^ i);
    return h;
  }
};

inline Partition split(std::size_t n, const SplitPlan& plan, std::size_t replicate) {
  plan.validate();
  if (n < 2) throw data_error("split: need at least 2 rows, have " + std::to_string(n));
  if (replicate >= plan.replicate_count)
    throw usage_error("split: replicate " + std::to_string(replicate) + " out of range");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(plan.base_seed, "split", replicate);
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t k = plan.train_size(n);
  Partition p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

template <class T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

}  // namespace dmprior
