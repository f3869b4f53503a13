#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fedsig/domain.hpp"

namespace fedsig::faers {

// One `$`-delimited file: a header row and untyped body rows. There is no
// quoting or escaping; a row's field count is one more than its `$` count.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  bool operator==(const RawTable&) const = default;
};

struct RawQuarter {
  Quarter quarter;
  RawTable demo;
  RawTable drug;
  RawTable reac;
  RawTable outc;

  bool operator==(const RawQuarter&) const = default;
};

// Parses delimited text. `label` names the source in error messages.
// Throws RaggedRow (with the 1-based line number) and NonUtf8Input.
RawTable parse_delimited(std::string_view text, std::string_view label = "input");
std::string serialize_delimited(const RawTable& table);

// "DEMO", {2012, 3} -> "DEMO12Q3.txt"
std::string quarter_file_name(std::string_view kind, Quarter q);

// Reads DEMO/DRUG/REAC/OUTC files for `q` from `directory`. Throws
// MissingFile naming the absent file.
RawQuarter parse_quarter(const std::string& directory, Quarter q);
void write_quarter(const RawQuarter& raw, const std::string& directory);

// primaryids in DRUG/REAC/OUTC that have no DEMO row.
std::vector<std::string> orphan_primary_ids(const RawQuarter& raw);

// Joins the four tables on primaryid: one record per REAC row, in REAC order.
// The ADR universe is the sorted set of preferred terms (`pt`). Severe
// outcomes are DE, LT, HO and DS in OUTC. Throws SchemaMismatch when a schema
// column's source field is in neither DEMO nor DRUG.
Dataset assemble_dataset(const RawQuarter& raw, const FeatureSchema& schema);

// Schema over public DEMO/DRUG fields (age, weight, sex, route, ...).
FeatureSchema default_schema();

}  // namespace fedsig::faers
