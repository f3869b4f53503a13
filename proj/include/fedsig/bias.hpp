#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedsig/domain.hpp"

namespace fedsig {

enum class BiasMode {
  kLabelFlip,     // invert outcome_severe
  kFeatureShift,  // add per-column offsets to normalized features
  kUnderReport,   // delete a fraction of severe records
};

std::string_view to_string(BiasMode mode);
BiasMode parse_bias_mode(std::string_view text);

struct ColumnShift {
  std::string column;
  double delta = 0.0;  // in normalized [0,1] units
};

struct BiasSpec {
  BiasMode mode = BiasMode::kLabelFlip;
  // Explicit targets. When empty, `table_fraction` of all tables is drawn
  // with the spec's seed instead.
  std::vector<TableKey> tables;
  double table_fraction = 0.0;
  // Fraction of each target table's records touched (label_flip,
  // feature_shift) or of its severe records deleted (under_report).
  double intensity = 1.0;
  std::vector<ColumnShift> shifts;
  std::uint64_t seed = 0;
};

// Returns the biased split and the ground truth: every table with at least
// one touched record and every touched record id. Records outside the target
// tables are never modified. Shifted features are clamped to [0,1].
// Throws EmptyTarget when the spec resolves to no tables, InvalidArgument for
// unknown tables or columns and out-of-range fractions.
std::pair<SplitDataset, BiasAnnotation> inject_bias(const SplitDataset& split, const BiasSpec& spec);

// The target tables `spec` resolves to on `split`.
std::vector<TableKey> resolve_targets(const SplitDataset& split, const BiasSpec& spec);

}  // namespace fedsig
