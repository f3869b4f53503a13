#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsig/domain.hpp"

namespace fedsig {

// Flattened logistic-regression parameters: one weight per feature in schema
// order, then the bias.
using ModelVector = std::vector<double>;

struct TrainingConfig {
  double learning_rate = 1.0;
  int epochs = 100;
  // Training is deterministic from a zero start; the seed is recorded for
  // provenance only.
  std::uint64_t seed = 0;
};

struct LocalClassifier {
  ClientId client_id = 0;
  AdrId adr_id;
  ModelVector params;
  std::size_t train_size = 0;
  double final_loss = 0.0;
  // All labels identical: the fit only pushes the bias term outward.
  bool degenerate = false;
};

struct AggregatedClassifier {
  AdrId adr_id;
  ModelVector params;
  std::vector<ClientId> contributor_ids;
};

struct DetectionConfig {
  double epsilon = 4.0;
  TrainingConfig training;
  std::size_t min_table_size = 5;
  bool size_weighted = false;
};

struct TableResult {
  double distance = 0.0;
  std::size_t size = 0;
  bool flagged = false;
  bool degenerate = false;
  // Why an over-threshold table was not flagged, if it was not.
  std::string exempt;
};

struct DetectionReport {
  double epsilon = 0.0;
  std::map<TableKey, TableResult> tables;
  std::set<TableKey> flagged;
  std::vector<AggregatedClassifier> ppgcm_per_adr;

  std::map<TableKey, double> distances() const;
};

// Full-batch gradient descent on mean binary cross-entropy predicting
// outcome_severe, from zero weights, for exactly cfg.epochs steps.
LocalClassifier train_local(const AdrTable& table, const TrainingConfig& cfg);

// Elementwise mean, accumulated in ascending client order so the result does
// not depend on input order. Throws MixedAdr and LengthMismatch.
AggregatedClassifier pre_aggregate(std::vector<LocalClassifier> classifiers,
                                   bool size_weighted = false);

double distance(std::span<const double> a, std::span<const double> b);
double distance(const LocalClassifier& lb, const AggregatedClassifier& g);

// (i,j) is flagged iff distance >= epsilon and the table has at least
// min_table_size records.
std::set<TableKey> flag_biased(const std::map<TableKey, double>& distances,
                               const std::map<TableKey, std::size_t>& sizes,
                               const DetectionConfig& cfg);

// Unflagged tables concatenated in client, ADR, record order.
// Throws AllTablesFlagged.
Dataset assemble_clean(const SplitDataset& split, const std::set<TableKey>& flagged);

struct DetectionResult {
  Dataset clean;
  DetectionReport report;
};

// One federated round: local fits, per-ADR aggregation, distances, flags.
DetectionReport detect(const SplitDataset& split, const DetectionConfig& cfg);
// detect() followed by assemble_clean().
DetectionResult run_detection(const SplitDataset& split, const DetectionConfig& cfg);

nlohmann::json to_json(const DetectionReport& report);
// One row per ADR: adr,contributors,p0..pd.
std::string ppgcm_csv(const DetectionReport& report);

}  // namespace fedsig
