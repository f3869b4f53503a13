#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fedsig {

// Dense ADR identifier in [0, m). Names live in Dataset::adr_universe.
struct AdrId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const AdrId&) const = default;
};

// Clients are numbered 1..n.
using ClientId = int;

struct TableKey {
  ClientId client = 0;
  AdrId adr;

  constexpr auto operator<=>(const TableKey&) const = default;
};

struct Quarter {
  int year = 0;
  int quarter = 1;  // 1..4

  constexpr auto operator<=>(const Quarter&) const = default;

  std::string to_string() const;  // "2012Q3"
  static Quarter parse(std::string_view text);
};

using Date = std::chrono::year_month_day;

std::string format_date(const Date& date);  // YYYY-MM-DD
std::optional<Date> parse_iso_date(std::string_view text);
// FAERS dates are YYYYMMDD; partial dates (YYYY, YYYYMM) are not accepted.
std::optional<Date> parse_compact_date(std::string_view text);

enum class ColumnKind { kNumeric, kCategorical };

struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  double lower_bound = 0.0;
  double upper_bound = 1.0;
  bool significant = true;
  // Source field in the FAERS tables. A ":year" suffix takes the leading four
  // digits of a date field.
  std::string source;
  // For categorical one-hot columns: the source value that encodes as 1.
  std::string category;

  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureSchema {
  std::vector<FeatureColumn> columns;

  std::size_t size() const noexcept { return columns.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;
};

enum class Provenance { kOriginal, kWashed, kPreprocessed, kSplitMember, kClean };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct AdverseEventRecord {
  // Stable identity carried through every stage; used by bias annotations and
  // prediction output.
  std::uint64_t record_id = 0;
  std::string patient_id;
  std::string drug_code;
  std::optional<Date> event_date;
  // Normalized values in [0,1]; NaN marks a missing value. Empty until the
  // dataset has been normalized.
  std::vector<double> features;
  std::vector<std::optional<double>> raw_features;
  AdrId adr_label;
  bool outcome_severe = false;
  Quarter report_quarter;

  // NaN feature slots compare equal to each other.
  bool operator==(const AdverseEventRecord& other) const;
};

struct Dataset {
  std::vector<AdverseEventRecord> records;
  FeatureSchema schema;
  std::vector<std::string> adr_universe;
  Provenance provenance = Provenance::kOriginal;
  bool normalized = false;

  std::size_t size() const noexcept { return records.size(); }
  std::optional<AdrId> find_adr(std::string_view name) const;

  bool operator==(const Dataset&) const = default;
};

struct AdrTable {
  ClientId client_id = 0;
  AdrId adr_id;
  std::vector<AdverseEventRecord> records;

  TableKey key() const { return {client_id, adr_id}; }
  bool operator==(const AdrTable&) const = default;
};

// One SplitSubdataset per client; each holds that client's non-empty tables
// in ascending ADR order.
using SplitSubdataset = std::vector<AdrTable>;

struct SplitDataset {
  std::vector<SplitSubdataset> subdatasets;
  int n = 0;
  int m = 0;
  FeatureSchema schema;
  std::vector<std::string> adr_universe;

  const AdrTable* find(TableKey key) const;
  AdrTable* find(TableKey key);
  std::size_t record_count() const;
  std::vector<TableKey> table_keys() const;
  // All records in client, ADR, record order.
  Dataset flatten(Provenance provenance = Provenance::kSplitMember) const;

  bool operator==(const SplitDataset&) const = default;
};

struct BiasAnnotation {
  std::set<TableKey> biased_tables;
  std::set<std::uint64_t> biased_record_ids;

  bool empty() const { return biased_tables.empty(); }
  bool operator==(const BiasAnnotation&) const = default;
};

struct Violation {
  std::string rule;
  std::string detail;
};

std::vector<Violation> validate_schema(const FeatureSchema& schema);
std::vector<Violation> validate_dataset(const Dataset& d);

}  // namespace fedsig
