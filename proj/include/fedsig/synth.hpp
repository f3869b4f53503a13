#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fedsig/domain.hpp"
#include "fedsig/rng.hpp"

namespace fedsig::synth {

struct SynthConfig {
  std::size_t size = 5868;
  int n_adr = 10;
  // Distance between neighbouring ADR means on each numeric column, in units
  // of the shared noise standard deviation.
  double mean_spacing = 1.0;
  // Severity model: logit = intercept + weight * sum of signed, centred
  // latent values over `informative` columns chosen per ADR.
  double severity_intercept = -1.0;
  double severity_weight = 1.0;
  int informative = 4;
  // Per-ADR signed effect of each significant one-hot column, centred on
  // the column's expected value for that ADR.
  double severity_category_weight = 3.0;
  // DRUG01 is the signal drug: its share among severe and non-severe reports.
  int n_drugs = 8;
  double signal_share_severe = 0.4;
  double signal_share_mild = 0.05;
  double duplicate_rate = 0.01;
  double outlier_rate = 0.002;
  double missing_rate_significant = 0.002;
  double missing_rate_insignificant = 0.15;
  int first_year = 2010;
  int last_year = 2024;
  // Optional relative ADR frequencies (length n_adr). Empty means balanced.
  std::vector<double> adr_weights;
};

// 38 columns, 30 of them significant: 20 numeric clinical measurements, the
// report year and one-hot sex / route / reporter groups.
FeatureSchema default_schema();

// Records are drawn from per-ADR distributions: each ADR has its own mean on
// every numeric column (a permuted grid) with unit noise, its own category
// frequencies, and its own logistic severity model. The returned annotation
// is always empty.
std::pair<Dataset, BiasAnnotation> generate(const SynthConfig& cfg, const FeatureSchema& schema,
                                            Rng& rng);

}  // namespace fedsig::synth
