#pragma once

#include <string>

#include <json.hpp>

#include "fedsig/domain.hpp"

namespace fedsig::io {

// Canonical dataset format: `<stem>.csv` holds one row per record and
// `<stem>.json` holds the schema, ADR universe and provenance.
//
// CSV columns, in order:
//   record_id,patient_id,drug_code,event_date,adr_label,outcome_severe,quarter
//   <column name>...        raw (pre-normalization) values, empty = missing
//   norm:<column name>...   normalized values; present only once normalized
// adr_label is the dense ADR index; names are in the sidecar.
std::string dataset_csv(const Dataset& d);
Dataset parse_dataset(std::string_view csv_text, const nlohmann::json& sidecar);

nlohmann::json dataset_sidecar(const Dataset& d);

// Writes `<path>` (a .csv path) and its .json sidecar.
void write_dataset(const Dataset& d, const std::string& csv_path);
Dataset read_dataset(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);
FeatureSchema read_schema_file(const std::string& path);

// Split layout: `<dir>/client{i}/adr{j}.csv` per table plus `<dir>/split.json`
// with n, m, the schema and the ADR universe.
void write_split(const SplitDataset& split, const std::string& dir);
SplitDataset read_split(const std::string& dir);

nlohmann::json annotation_to_json(const BiasAnnotation& a);
BiasAnnotation annotation_from_json(const nlohmann::json& j);

}  // namespace fedsig::io
