#include "fedsig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "fedsig/error.hpp"

namespace fedsig::synth {

namespace {

FeatureColumn numeric(std::string name, double lo, double hi, bool significant = true) {
  FeatureColumn c;
  c.name = name;
  c.kind = ColumnKind::kNumeric;
  c.lower_bound = lo;
  c.upper_bound = hi;
  c.significant = significant;
  c.source = std::move(name);
  return c;
}

FeatureColumn onehot(std::string name, std::string source, std::string category,
                     bool significant = true) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = ColumnKind::kCategorical;
  c.lower_bound = 0.0;
  c.upper_bound = 1.0;
  c.significant = significant;
  c.source = std::move(source);
  c.category = std::move(category);
  return c;
}

bool is_year_column(const FeatureColumn& c) {
  return c.name == "report_year" ||
         (c.source.size() > 5 && c.source.compare(c.source.size() - 5, 5, ":year") == 0);
}

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
  return buf;
}

// Largest-remainder apportionment of `size` over `weights`.
std::vector<std::size_t> apportion(std::size_t size, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double exact = static_cast<double>(size) * weights[j] / total;
    counts[j] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[j];
    remainders.emplace_back(exact - std::floor(exact), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < size; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

struct CategoryGroup {
  std::vector<std::size_t> members;  // schema indices
  bool informative = false;
  // Per ADR: weights over members followed by one "none of these" slot.
  std::vector<std::vector<double>> weights;
};

}  // namespace

FeatureSchema default_schema() {
  FeatureSchema s;
  s.columns = {
      numeric("age", 0.0, 120.0),
      numeric("weight", 0.5, 300.0),
      numeric("height_cm", 40.0, 230.0),
      numeric("bmi", 8.0, 80.0),
      numeric("dose_mg", 0.0, 2000.0),
      numeric("therapy_days", 0.0, 3650.0),
      numeric("onset_days", 0.0, 730.0),
      numeric("concomitant_drugs", 0.0, 40.0),
      numeric("heart_rate", 20.0, 220.0),
      numeric("systolic_bp", 50.0, 250.0),
      numeric("diastolic_bp", 20.0, 150.0),
      numeric("alt", 0.0, 2000.0),
      numeric("ast", 0.0, 2000.0),
      numeric("creatinine", 0.1, 15.0),
      numeric("hemoglobin", 3.0, 22.0),
      numeric("platelets", 5.0, 1000.0),
      numeric("wbc", 0.5, 60.0),
      numeric("glucose", 20.0, 800.0),
      numeric("sodium", 100.0, 180.0),
      numeric("potassium", 1.5, 9.0),
      numeric("report_year", 2010.0, 2024.0),
      onehot("sex_f", "sex", "F"),
      onehot("sex_m", "sex", "M"),
      onehot("route_oral", "route", "ORAL"),
      onehot("route_iv", "route", "INTRAVENOUS"),
      onehot("route_sc", "route", "SUBCUTANEOUS"),
      onehot("route_topical", "route", "TOPICAL"),
      onehot("reporter_physician", "occp_cod", "MD"),
      onehot("reporter_pharmacist", "occp_cod", "PH"),
      onehot("reporter_consumer", "occp_cod", "CN"),
      numeric("mfr_seq", 0.0, 1000.0, false),
      numeric("case_version", 1.0, 50.0, false),
      numeric("region_code", 0.0, 99.0, false),
      onehot("country_us", "reporter_country", "US", false),
      onehot("country_other", "reporter_country", "OTHER", false),
      onehot("expedited", "rept_cod", "EXP", false),
      onehot("literature", "lit_ref", "Y", false),
      onehot("e2b", "e2b", "Y", false),
  };
  return s;
}

std::pair<Dataset, BiasAnnotation> generate(const SynthConfig& cfg, const FeatureSchema& schema,
                                            Rng& rng) {
  const auto m = static_cast<std::size_t>(cfg.n_adr);
  if (cfg.n_adr < 1 || cfg.size < m) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic corpus needs size >= n_adr >= 1");
  }
  if (!cfg.adr_weights.empty() && cfg.adr_weights.size() != m) {
    throw Error(ErrorKind::kInvalidArgument, "adr_weights must have n_adr entries");
  }
  if (!validate_schema(schema).empty()) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic generator needs a valid schema");
  }
  const std::size_t width = schema.size();

  // Layout: everything that distinguishes one ADR from another.
  Rng layout = rng.fork("layout");
  std::vector<std::size_t> latent_cols;  // informative numeric columns
  std::vector<std::size_t> noise_cols;   // insignificant numeric columns
  std::size_t year_col = width;
  for (std::size_t c = 0; c < width; ++c) {
    const auto& col = schema.columns[c];
    if (col.kind != ColumnKind::kNumeric) continue;
    if (is_year_column(col)) {
      year_col = c;
    } else if (col.significant) {
      latent_cols.push_back(c);
    } else {
      noise_cols.push_back(c);
    }
  }
  // mean[j][k]: latent mean of ADR j on latent column k.
  std::vector<std::vector<double>> mean(m, std::vector<double>(latent_cols.size()));
  for (std::size_t k = 0; k < latent_cols.size(); ++k) {
    std::vector<std::size_t> grid(m);
    for (std::size_t j = 0; j < m; ++j) grid[j] = j;
    layout.shuffle(grid);
    for (std::size_t j = 0; j < m; ++j) {
      mean[j][k] = cfg.mean_spacing * (static_cast<double>(grid[j]) - 0.5 * static_cast<double>(m - 1));
    }
  }
  const double span = cfg.mean_spacing * static_cast<double>(m - 1) + 12.0;

  struct Term {
    std::size_t k;
    double sign;
  };
  std::vector<std::vector<Term>> severity(m);
  const auto n_inf = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.informative, 0)),
                                           latent_cols.size());
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::size_t> order(latent_cols.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    layout.shuffle(order);
    for (std::size_t t = 0; t < n_inf; ++t) {
      severity[j].push_back({order[t], t % 2 == 0 ? 1.0 : -1.0});
    }
  }

  std::vector<CategoryGroup> groups;
  {
    std::map<std::string, std::size_t> by_source;
    for (std::size_t c = 0; c < width; ++c) {
      const auto& col = schema.columns[c];
      if (col.kind != ColumnKind::kCategorical) continue;
      auto [it, inserted] = by_source.emplace(col.source.empty() ? col.name : col.source,
                                              groups.size());
      if (inserted) groups.push_back({});
      groups[it->second].members.push_back(c);
      groups[it->second].informative = groups[it->second].informative || col.significant;
    }
    for (auto& g : groups) {
      g.weights.assign(m, {});
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t e = 0; e < g.members.size(); ++e) {
          g.weights[j].push_back(g.informative ? 0.2 + 2.0 * layout.uniform01() : 1.0);
        }
        g.weights[j].push_back(g.members.size() == 1 ? (g.informative ? 1.0 : 2.0) : 0.3);
      }
    }
  }
  // cat_effect[j][c]: severity coefficient of one-hot column c for ADR j,
  // and cat_mean[j][c] its expected value.
  std::vector<std::vector<double>> cat_effect(m, std::vector<double>(width, 0.0));
  std::vector<std::vector<double>> cat_mean(m, std::vector<double>(width, 0.0));
  for (const auto& g : groups) {
    if (!g.informative) continue;
    for (std::size_t j = 0; j < m; ++j) {
      double total = 0.0;
      for (double w : g.weights[j]) total += w;
      for (std::size_t e = 0; e < g.members.size(); ++e) {
        const auto c = g.members[e];
        if (!schema.columns[c].significant) continue;
        cat_effect[j][c] = layout.bernoulli(0.5) ? cfg.severity_category_weight
                                                 : -cfg.severity_category_weight;
        cat_mean[j][c] = g.weights[j][e] / total;
      }
    }
  }
  std::vector<std::size_t> significant_cols;
  for (std::size_t c = 0; c < width; ++c) {
    if (schema.columns[c].significant) significant_cols.push_back(c);
  }

  // Labels: exact apportionment, then shuffled.
  const auto counts =
      apportion(cfg.size, cfg.adr_weights.empty() ? std::vector<double>(m, 1.0) : cfg.adr_weights);
  std::vector<std::uint32_t> labels;
  labels.reserve(cfg.size);
  for (std::size_t j = 0; j < m; ++j) labels.insert(labels.end(), counts[j], static_cast<std::uint32_t>(j));
  rng.shuffle(labels);

  Dataset d;
  d.schema = schema;
  d.provenance = Provenance::kOriginal;
  for (std::size_t j = 0; j < m; ++j) d.adr_universe.push_back(padded("ADR", j + 1, 2));
  d.records.reserve(cfg.size);
  std::vector<std::vector<std::size_t>> seen(m);
  const int years = std::max(cfg.last_year - cfg.first_year + 1, 1);

  for (std::size_t i = 0; i < cfg.size; ++i) {
    const std::uint32_t j = labels[i];
    if (!seen[j].empty() && rng.bernoulli(cfg.duplicate_rate)) {
      const auto src = seen[j][static_cast<std::size_t>(rng.below(seen[j].size()))];
      AdverseEventRecord dup = d.records[src];
      dup.record_id = i;
      d.records.push_back(std::move(dup));
      continue;
    }
    AdverseEventRecord r;
    r.record_id = i;
    r.patient_id = padded("P", i + 1, 6);
    r.adr_label = AdrId{j};
    r.report_quarter = {cfg.first_year + static_cast<int>(rng.below(static_cast<std::uint64_t>(years))),
                        1 + static_cast<int>(rng.below(4))};
    const unsigned month = static_cast<unsigned>(3 * (r.report_quarter.quarter - 1) + 1) +
                           static_cast<unsigned>(rng.below(3));
    r.event_date = Date{std::chrono::year{r.report_quarter.year}, std::chrono::month{month},
                        std::chrono::day{1 + static_cast<unsigned>(rng.below(28))}};
    r.raw_features.assign(width, std::nullopt);

    std::vector<double> latent(latent_cols.size());
    for (std::size_t k = 0; k < latent_cols.size(); ++k) {
      latent[k] = mean[j][k] + rng.normal();
      const auto& col = schema.columns[latent_cols[k]];
      const double unit = std::clamp(0.5 + latent[k] / span, 0.0, 1.0);
      r.raw_features[latent_cols[k]] = col.lower_bound + (col.upper_bound - col.lower_bound) * unit;
    }
    for (std::size_t c : noise_cols) {
      const auto& col = schema.columns[c];
      r.raw_features[c] = rng.uniform(col.lower_bound, col.upper_bound);
    }
    if (year_col < width) r.raw_features[year_col] = static_cast<double>(r.report_quarter.year);
    for (const auto& g : groups) {
      const auto pick = rng.weighted_index(g.weights[j]);
      for (std::size_t e = 0; e < g.members.size(); ++e) {
        r.raw_features[g.members[e]] = e == pick ? 1.0 : 0.0;
      }
    }

    double logit = cfg.severity_intercept;
    for (const auto& term : severity[j]) {
      logit += cfg.severity_weight * term.sign * (latent[term.k] - mean[j][term.k]);
    }
    for (const auto& g : groups) {
      for (std::size_t c : g.members) {
        if (cat_effect[j][c] != 0.0) logit += cat_effect[j][c] * (*r.raw_features[c] - cat_mean[j][c]);
      }
    }
    r.outcome_severe = rng.bernoulli(1.0 / (1.0 + std::exp(-logit)));

    const double share = r.outcome_severe ? cfg.signal_share_severe : cfg.signal_share_mild;
    std::size_t drug = 1;
    if (cfg.n_drugs > 1 && !rng.bernoulli(share)) {
      drug = 2 + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(cfg.n_drugs - 1)));
    }
    r.drug_code = padded("DRUG", drug, 2);

    // Reporting noise: missing values and out-of-range entries.
    for (std::size_t c = 0; c < width; ++c) {
      if (!schema.columns[c].significant && rng.bernoulli(cfg.missing_rate_insignificant)) {
        r.raw_features[c].reset();
      }
    }
    if (!significant_cols.empty() && rng.bernoulli(cfg.missing_rate_significant)) {
      r.raw_features[significant_cols[rng.below(significant_cols.size())]].reset();
    }
    if (!latent_cols.empty() && rng.bernoulli(cfg.outlier_rate)) {
      const auto c = latent_cols[rng.below(latent_cols.size())];
      const auto& col = schema.columns[c];
      r.raw_features[c] = col.upper_bound + 0.5 * (col.upper_bound - col.lower_bound);
    }
    seen[j].push_back(d.records.size());
    d.records.push_back(std::move(r));
  }
  return {std::move(d), BiasAnnotation{}};
}

}  // namespace fedsig::synth
