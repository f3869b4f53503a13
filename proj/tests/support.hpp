#pragma once

#include <string>
#include <vector>

#include "fedsig/domain.hpp"

namespace fedsig::testing {

inline FeatureColumn numeric_column(std::string name, double lo, double hi, bool significant = true) {
  FeatureColumn c;
  c.name = name;
  c.kind = ColumnKind::kNumeric;
  c.lower_bound = lo;
  c.upper_bound = hi;
  c.significant = significant;
  c.source = std::move(name);
  return c;
}

// Records with raw values only; call normalize() to fill features.
inline AdverseEventRecord record(std::uint64_t id, std::string patient, std::string drug,
                                 std::uint32_t adr, bool severe,
                                 std::vector<std::optional<double>> raw) {
  AdverseEventRecord r;
  r.record_id = id;
  r.patient_id = std::move(patient);
  r.drug_code = std::move(drug);
  r.adr_label = AdrId{adr};
  r.outcome_severe = severe;
  r.raw_features = std::move(raw);
  r.report_quarter = {2012, 3};
  return r;
}

inline std::vector<std::string> adr_names(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back("ADR" + std::to_string(j + 1));
  return out;
}

// Preprocessed-looking records with explicit normalized features.
inline Dataset feature_dataset(const std::vector<std::vector<double>>& features,
                               const std::vector<std::uint32_t>& labels,
                               const std::vector<bool>& severe, std::size_t m) {
  Dataset d;
  for (std::size_t c = 0; c < features.front().size(); ++c) {
    d.schema.columns.push_back(numeric_column("f" + std::to_string(c), 0.0, 1.0));
  }
  d.adr_universe = adr_names(m);
  d.provenance = Provenance::kPreprocessed;
  d.normalized = true;
  for (std::size_t i = 0; i < features.size(); ++i) {
    AdverseEventRecord r;
    r.record_id = i;
    r.patient_id = "P" + std::to_string(i);
    r.drug_code = "DRUG01";
    r.adr_label = AdrId{labels[i]};
    r.outcome_severe = severe[i];
    r.features = features[i];
    for (double v : features[i]) r.raw_features.emplace_back(v);
    d.records.push_back(std::move(r));
  }
  return d;
}

inline AdrTable table(ClientId client, std::uint32_t adr, std::vector<AdverseEventRecord> records) {
  return AdrTable{client, AdrId{adr}, std::move(records)};
}

}  // namespace fedsig::testing
