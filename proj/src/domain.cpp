#include "fedsig/domain.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "fedsig/error.hpp"

namespace fedsig {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kRaggedRow: return "RaggedRow";
    case ErrorKind::kNonUtf8Input: return "NonUtf8Input";
    case ErrorKind::kParse: return "Parse";
    case ErrorKind::kSchemaMismatch: return "SchemaMismatch";
    case ErrorKind::kEmptyTarget: return "EmptyTarget";
    case ErrorKind::kAllRecordsRemoved: return "AllRecordsRemoved";
    case ErrorKind::kMixedAdr: return "MixedAdr";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kAllTablesFlagged: return "AllTablesFlagged";
    case ErrorKind::kUnknownDrug: return "UnknownDrug";
    case ErrorKind::kUnknownAdr: return "UnknownAdr";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kSingleClass: return "SingleClass";
  }
  return "Unknown";
}

namespace {

bool parse_int(std::string_view text, int& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool same_feature(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

std::string Quarter::to_string() const {
  return std::to_string(year) + "Q" + std::to_string(quarter);
}

Quarter Quarter::parse(std::string_view text) {
  const auto q = text.find_first_of("Qq");
  Quarter out;
  if (q == std::string_view::npos || !parse_int(text.substr(0, q), out.year) ||
      !parse_int(text.substr(q + 1), out.quarter) || out.quarter < 1 ||
      out.quarter > 4) {
    throw Error(ErrorKind::kParse, "bad quarter '" + std::string(text) + "'");
  }
  return out;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()));
  return buf;
}

std::optional<Date> parse_iso_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::optional<Date> parse_compact_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 8 || !parse_int(text.substr(0, 4), y) ||
      !parse_int(text.substr(4, 2), m) || !parse_int(text.substr(6, 2), d)) {
    return std::nullopt;
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kOriginal: return "original";
    case Provenance::kWashed: return "washed";
    case Provenance::kPreprocessed: return "preprocessed";
    case Provenance::kSplitMember: return "split-member";
    case Provenance::kClean: return "clean";
  }
  return "original";
}

Provenance parse_provenance(std::string_view text) {
  for (auto p : {Provenance::kOriginal, Provenance::kWashed, Provenance::kPreprocessed,
                 Provenance::kSplitMember, Provenance::kClean}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorKind::kParse, "unknown provenance '" + std::string(text) + "'");
}

bool AdverseEventRecord::operator==(const AdverseEventRecord& other) const {
  if (record_id != other.record_id || patient_id != other.patient_id ||
      drug_code != other.drug_code || event_date != other.event_date ||
      adr_label != other.adr_label || outcome_severe != other.outcome_severe ||
      report_quarter != other.report_quarter ||
      raw_features != other.raw_features ||
      features.size() != other.features.size()) {
    return false;
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!same_feature(features[i], other.features[i])) return false;
  }
  return true;
}

std::optional<AdrId> Dataset::find_adr(std::string_view name) const {
  for (std::size_t i = 0; i < adr_universe.size(); ++i) {
    if (adr_universe[i] == name) return AdrId{static_cast<std::uint32_t>(i)};
  }
  return std::nullopt;
}

const AdrTable* SplitDataset::find(TableKey key) const {
  if (key.client < 1 || key.client > static_cast<int>(subdatasets.size())) return nullptr;
  for (const auto& table : subdatasets[static_cast<std::size_t>(key.client - 1)]) {
    if (table.adr_id == key.adr) return &table;
  }
  return nullptr;
}

AdrTable* SplitDataset::find(TableKey key) {
  return const_cast<AdrTable*>(std::as_const(*this).find(key));
}

std::size_t SplitDataset::record_count() const {
  std::size_t total = 0;
  for (const auto& sub : subdatasets) {
    for (const auto& table : sub) total += table.records.size();
  }
  return total;
}

std::vector<TableKey> SplitDataset::table_keys() const {
  std::vector<TableKey> keys;
  for (const auto& sub : subdatasets) {
    for (const auto& table : sub) keys.push_back(table.key());
  }
  return keys;
}

Dataset SplitDataset::flatten(Provenance provenance) const {
  Dataset out;
  out.schema = schema;
  out.adr_universe = adr_universe;
  out.provenance = provenance;
  out.normalized = true;
  out.records.reserve(record_count());
  for (const auto& sub : subdatasets) {
    for (const auto& table : sub) {
      out.records.insert(out.records.end(), table.records.begin(), table.records.end());
    }
  }
  return out;
}

std::vector<Violation> validate_schema(const FeatureSchema& schema) {
  std::vector<Violation> out;
  bool any_significant = false;
  std::set<std::string> names;
  for (const auto& col : schema.columns) {
    any_significant = any_significant || col.significant;
    if (col.kind == ColumnKind::kNumeric && !(col.lower_bound < col.upper_bound)) {
      out.push_back({"schema.bounds", "column '" + col.name + "' has lower >= upper"});
    }
    if (!names.insert(col.name).second) {
      out.push_back({"schema.duplicate", "column '" + col.name + "' appears twice"});
    }
  }
  if (!any_significant) {
    out.push_back({"schema.significant", "no column is marked significant"});
  }
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out = validate_schema(d.schema);
  const std::size_t width = d.schema.size();
  // Missing normalized values are only legal before feature deletion.
  const bool complete_features = d.provenance == Provenance::kPreprocessed ||
                                 d.provenance == Provenance::kSplitMember ||
                                 d.provenance == Provenance::kClean;
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    const auto& rec = d.records[r];
    const std::string where = "record " + std::to_string(rec.record_id);
    if (rec.raw_features.size() != width) {
      out.push_back({"record.raw_width", where + " has " +
                                            std::to_string(rec.raw_features.size()) +
                                            " raw features, schema has " +
                                            std::to_string(width)});
    }
    if (d.normalized) {
      if (rec.features.size() != width) {
        out.push_back({"record.feature_width",
                       where + " has " + std::to_string(rec.features.size()) +
                           " features, schema has " + std::to_string(width)});
      }
      for (std::size_t i = 0; i < rec.features.size(); ++i) {
        const double v = rec.features[i];
        if (std::isnan(v)) {
          if (complete_features) {
            out.push_back({"record.feature_missing",
                           where + " is missing feature " + std::to_string(i)});
          }
        } else if (!(v >= 0.0 && v <= 1.0)) {
          out.push_back({"record.feature_range", where + " feature " + std::to_string(i) +
                                                      " = " + std::to_string(v) +
                                                      " outside [0,1]"});
        }
      }
    } else if (!rec.features.empty()) {
      out.push_back({"record.feature_width",
                     where + " carries features but the dataset is not normalized"});
    }
    if (rec.adr_label.value >= d.adr_universe.size()) {
      out.push_back({"record.adr_universe", where + " has label " +
                                                std::to_string(rec.adr_label.value) +
                                                " outside the ADR universe"});
    }
  }
  return out;
}

}  // namespace fedsig
