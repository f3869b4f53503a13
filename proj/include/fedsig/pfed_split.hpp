#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "fedsig/domain.hpp"
#include "fedsig/rng.hpp"

namespace fedsig {

struct CleaningReport {
  std::size_t input_size = 0;
  std::size_t duplicates_removed = 0;
  std::size_t out_of_bounds_removed = 0;
  std::size_t null_significant_removed = 0;
  std::size_t output_size = 0;
  // Out-of-bounds values per column. A record can hit several columns, so
  // these need not sum to out_of_bounds_removed.
  std::map<std::string, std::size_t> bound_hits;

  bool operator==(const CleaningReport&) const = default;
};

nlohmann::json to_json(const CleaningReport& report);

// Drops repeats of (drug_code, patient_id, event_date), keeping the first,
// then drops records with a numeric raw value outside its column bounds.
std::pair<Dataset, CleaningReport> clean(const Dataset& d);

// Per-column min-max scaling of raw values into `features`. Constant columns
// map to 0; missing values stay missing (NaN).
Dataset normalize(const Dataset& d);

// Drops insignificant columns, then records missing any remaining value.
// Throws AllRecordsRemoved when nothing is left.
Dataset feature_delete(const Dataset& d);

// Seeded shuffle, round-robin deal into n clients, then grouping by ADR.
SplitDataset split_uniform(const Dataset& d, int n, Rng& rng);

struct Preprocessed {
  Dataset dataset;
  CleaningReport report;
};

// clean -> normalize -> feature_delete. The report's null_significant_removed
// and output_size cover the feature-deletion step as well.
Preprocessed preprocess(const Dataset& original);

}  // namespace fedsig
