#include "fedsig/pfed_split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "fedsig/error.hpp"

namespace fedsig {

nlohmann::json to_json(const CleaningReport& report) {
  return nlohmann::json{{"input_size", report.input_size},
                        {"duplicates_removed", report.duplicates_removed},
                        {"out_of_bounds_removed", report.out_of_bounds_removed},
                        {"null_significant_removed", report.null_significant_removed},
                        {"output_size", report.output_size},
                        {"bound_hits", report.bound_hits}};
}

std::pair<Dataset, CleaningReport> clean(const Dataset& d) {
  CleaningReport report;
  report.input_size = d.size();
  Dataset out;
  out.schema = d.schema;
  out.adr_universe = d.adr_universe;
  out.provenance = Provenance::kWashed;
  out.normalized = d.normalized;

  using Key = std::tuple<std::string, std::string, std::optional<Date>>;
  std::set<Key> seen;
  for (const auto& r : d.records) {
    if (!seen.emplace(r.drug_code, r.patient_id, r.event_date).second) {
      ++report.duplicates_removed;
      continue;
    }
    bool in_bounds = true;
    for (std::size_t c = 0; c < d.schema.size() && c < r.raw_features.size(); ++c) {
      const auto& col = d.schema.columns[c];
      const auto& v = r.raw_features[c];
      if (col.kind != ColumnKind::kNumeric || !v) continue;
      if (*v < col.lower_bound || *v > col.upper_bound) {
        ++report.bound_hits[col.name];
        in_bounds = false;
      }
    }
    if (!in_bounds) {
      ++report.out_of_bounds_removed;
      continue;
    }
    out.records.push_back(r);
  }
  report.output_size = out.size();
  return {std::move(out), std::move(report)};
}

Dataset normalize(const Dataset& d) {
  Dataset out = d;
  const std::size_t width = d.schema.size();
  std::vector<double> lo(width, std::numeric_limits<double>::infinity());
  std::vector<double> hi(width, -std::numeric_limits<double>::infinity());
  for (const auto& r : d.records) {
    for (std::size_t c = 0; c < width; ++c) {
      if (const auto& v = r.raw_features[c]) {
        lo[c] = std::min(lo[c], *v);
        hi[c] = std::max(hi[c], *v);
      }
    }
  }
  for (auto& r : out.records) {
    r.features.assign(width, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < width; ++c) {
      const auto& v = r.raw_features[c];
      if (!v) continue;
      const double range = hi[c] - lo[c];
      r.features[c] = range > 0.0 ? (*v - lo[c]) / range : 0.0;
    }
  }
  out.normalized = true;
  return out;
}

Dataset feature_delete(const Dataset& d) {
  std::vector<std::size_t> keep;
  Dataset out;
  out.adr_universe = d.adr_universe;
  out.provenance = Provenance::kPreprocessed;
  out.normalized = d.normalized;
  for (std::size_t c = 0; c < d.schema.size(); ++c) {
    if (d.schema.columns[c].significant) {
      keep.push_back(c);
      out.schema.columns.push_back(d.schema.columns[c]);
    }
  }
  for (const auto& r : d.records) {
    AdverseEventRecord copy = r;
    copy.raw_features.clear();
    copy.features.clear();
    bool complete = true;
    for (std::size_t c : keep) {
      copy.raw_features.push_back(r.raw_features[c]);
      if (d.normalized) {
        copy.features.push_back(r.features[c]);
        complete = complete && !std::isnan(r.features[c]);
      } else {
        complete = complete && r.raw_features[c].has_value();
      }
    }
    if (complete) out.records.push_back(std::move(copy));
  }
  if (out.records.empty()) {
    throw Error(ErrorKind::kAllRecordsRemoved,
                std::to_string(d.size()) + " records in, none complete in significant columns");
  }
  return out;
}

SplitDataset split_uniform(const Dataset& d, int n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "client count must be >= 1");
  if (d.records.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot split an empty dataset");
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  SplitDataset split;
  split.n = n;
  split.m = static_cast<int>(d.adr_universe.size());
  split.schema = d.schema;
  split.adr_universe = d.adr_universe;
  split.subdatasets.resize(static_cast<std::size_t>(n));
  // tables[i][j] collects client i+1's records for ADR j.
  std::vector<std::vector<std::vector<AdverseEventRecord>>> tables(
      static_cast<std::size_t>(n), std::vector<std::vector<AdverseEventRecord>>(d.adr_universe.size()));
  for (std::size_t p = 0; p < order.size(); ++p) {
    const auto& r = d.records[order[p]];
    if (r.adr_label.value >= d.adr_universe.size()) {
      throw Error(ErrorKind::kInvalidArgument, "record label outside the ADR universe");
    }
    tables[p % static_cast<std::size_t>(n)][r.adr_label.value].push_back(r);
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t j = 0; j < tables[i].size(); ++j) {
      if (tables[i][j].empty()) continue;
      split.subdatasets[i].push_back(
          {static_cast<ClientId>(i + 1), AdrId{static_cast<std::uint32_t>(j)}, std::move(tables[i][j])});
    }
  }
  return split;
}

Preprocessed preprocess(const Dataset& original) {
  auto [washed, report] = clean(original);
  Dataset normalized = normalize(washed);
  Dataset pre = feature_delete(normalized);
  report.null_significant_removed = normalized.size() - pre.size();
  report.output_size = pre.size();
  return {std::move(pre), std::move(report)};
}

}  // namespace fedsig
