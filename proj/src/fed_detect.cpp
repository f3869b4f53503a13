#include "fedsig/fed_detect.hpp"

#include <algorithm>
#include <cmath>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

std::map<TableKey, double> DetectionReport::distances() const {
  std::map<TableKey, double> out;
  for (const auto& [k, t] : tables) out.emplace(k, t.distance);
  return out;
}

LocalClassifier train_local(const AdrTable& table, const TrainingConfig& cfg) {
  if (table.records.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot train on an empty table");
  const std::size_t d = table.records.front().features.size();
  const std::size_t n = table.records.size();
  for (const auto& r : table.records) {
    if (r.features.size() != d) throw Error(ErrorKind::kShapeMismatch, "ragged feature vectors");
  }
  LocalClassifier lb;
  lb.client_id = table.client_id;
  lb.adr_id = table.adr_id;
  lb.train_size = n;
  lb.params.assign(d + 1, 0.0);
  std::size_t positives = 0;
  for (const auto& r : table.records) positives += r.outcome_severe ? 1 : 0;
  lb.degenerate = positives == 0 || positives == n;

  std::vector<double> grad(d + 1);
  auto loss_at = [&](bool with_grad) {
    double loss = 0.0;
    if (with_grad) std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& r : table.records) {
      double z = lb.params[d];
      for (std::size_t k = 0; k < d; ++k) z += lb.params[k] * r.features[k];
      const double y = r.outcome_severe ? 1.0 : 0.0;
      // -[y log p + (1-y) log(1-p)] = softplus(z) - y z
      loss += softplus(z) - y * z;
      if (with_grad) {
        const double g = sigmoid(z) - y;
        for (std::size_t k = 0; k < d; ++k) grad[k] += g * r.features[k];
        grad[d] += g;
      }
    }
    return loss / static_cast<double>(n);
  };
  const double scale = cfg.learning_rate / static_cast<double>(n);
  for (int e = 0; e < cfg.epochs; ++e) {
    loss_at(true);
    for (std::size_t k = 0; k <= d; ++k) lb.params[k] -= scale * grad[k];
  }
  lb.final_loss = loss_at(false);
  return lb;
}

AggregatedClassifier pre_aggregate(std::vector<LocalClassifier> classifiers, bool size_weighted) {
  if (classifiers.empty()) throw Error(ErrorKind::kInvalidArgument, "nothing to aggregate");
  std::sort(classifiers.begin(), classifiers.end(),
            [](const LocalClassifier& a, const LocalClassifier& b) { return a.client_id < b.client_id; });
  const auto adr = classifiers.front().adr_id;
  const auto len = classifiers.front().params.size();
  AggregatedClassifier g;
  g.adr_id = adr;
  g.params.assign(len, 0.0);
  double total_weight = 0.0;
  for (const auto& lb : classifiers) {
    if (lb.adr_id != adr) throw Error(ErrorKind::kMixedAdr, "classifiers for different ADRs");
    if (lb.params.size() != len) throw Error(ErrorKind::kLengthMismatch, "parameter lengths differ");
    const double w = size_weighted ? static_cast<double>(lb.train_size) : 1.0;
    for (std::size_t k = 0; k < len; ++k) g.params[k] += w * lb.params[k];
    total_weight += w;
    g.contributor_ids.push_back(lb.client_id);
  }
  for (auto& v : g.params) v /= total_weight;
  return g;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kLengthMismatch, "vector lengths differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double distance(const LocalClassifier& lb, const AggregatedClassifier& g) {
  if (lb.adr_id != g.adr_id) throw Error(ErrorKind::kMixedAdr, "classifier and PPGCM differ in ADR");
  return distance(lb.params, g.params);
}

std::set<TableKey> flag_biased(const std::map<TableKey, double>& distances,
                               const std::map<TableKey, std::size_t>& sizes,
                               const DetectionConfig& cfg) {
  std::set<TableKey> flagged;
  for (const auto& [key, dist] : distances) {
    const auto it = sizes.find(key);
    const std::size_t size = it == sizes.end() ? 0 : it->second;
    if (dist >= cfg.epsilon && size >= cfg.min_table_size) flagged.insert(key);
  }
  return flagged;
}

Dataset assemble_clean(const SplitDataset& split, const std::set<TableKey>& flagged) {
  Dataset out;
  out.schema = split.schema;
  out.adr_universe = split.adr_universe;
  out.provenance = Provenance::kClean;
  out.normalized = true;
  for (const auto& sub : split.subdatasets) {
    for (const auto& t : sub) {
      if (flagged.contains(t.key())) continue;
      out.records.insert(out.records.end(), t.records.begin(), t.records.end());
    }
  }
  if (out.records.empty() && split.record_count() > 0) {
    throw Error(ErrorKind::kAllTablesFlagged, "every table was flagged as biased");
  }
  return out;
}

DetectionReport detect(const SplitDataset& split, const DetectionConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "epsilon must be > 0");
  std::map<AdrId, std::vector<LocalClassifier>> by_adr;
  for (const auto& sub : split.subdatasets) {
    for (const auto& t : sub) by_adr[t.adr_id].push_back(train_local(t, cfg.training));
  }
  DetectionReport report;
  report.epsilon = cfg.epsilon;
  std::map<TableKey, double> distances;
  std::map<TableKey, std::size_t> sizes;
  for (const auto& [adr, locals] : by_adr) {
    auto g = pre_aggregate(locals, cfg.size_weighted);
    for (const auto& lb : locals) {
      const TableKey key{lb.client_id, adr};
      TableResult r;
      r.distance = distance(lb, g);
      r.size = lb.train_size;
      r.degenerate = lb.degenerate;
      if (locals.size() == 1) {
        r.exempt = "single contributor";
      } else if (r.distance >= cfg.epsilon && r.size < cfg.min_table_size) {
        r.exempt = "below min_table_size";
      }
      distances.emplace(key, r.distance);
      sizes.emplace(key, r.size);
      report.tables.emplace(key, std::move(r));
    }
    report.ppgcm_per_adr.push_back(std::move(g));
  }
  report.flagged = flag_biased(distances, sizes, cfg);
  for (const auto& key : report.flagged) report.tables[key].flagged = true;
  return report;
}

DetectionResult run_detection(const SplitDataset& split, const DetectionConfig& cfg) {
  auto report = detect(split, cfg);
  Dataset clean = assemble_clean(split, report.flagged);
  return {std::move(clean), std::move(report)};
}

nlohmann::json to_json(const DetectionReport& report) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& [key, t] : report.tables) {
    nlohmann::json row{{"client", key.client},
                       {"adr", key.adr.value},
                       {"distance", t.distance},
                       {"size", t.size},
                       {"flagged", t.flagged},
                       {"degenerate", t.degenerate}};
    if (!t.exempt.empty()) row["exempt"] = t.exempt;
    tables.push_back(std::move(row));
  }
  nlohmann::json flagged = nlohmann::json::array();
  for (const auto& key : report.flagged) flagged.push_back({{"client", key.client}, {"adr", key.adr.value}});
  return nlohmann::json{{"epsilon", report.epsilon},
                        {"flagged_count", report.flagged.size()},
                        {"flagged", flagged},
                        {"tables", tables}};
}

std::string ppgcm_csv(const DetectionReport& report) {
  std::string out;
  std::size_t width = 0;
  for (const auto& g : report.ppgcm_per_adr) width = std::max(width, g.params.size());
  std::vector<std::string> row{"adr", "contributors"};
  for (std::size_t k = 0; k < width; ++k) row.push_back("p" + std::to_string(k));
  out += csv::join_row(row) + "\n";
  for (const auto& g : report.ppgcm_per_adr) {
    row.clear();
    row.push_back(std::to_string(g.adr_id.value));
    std::string ids;
    for (std::size_t i = 0; i < g.contributor_ids.size(); ++i) {
      ids += (i ? ";" : "") + std::to_string(g.contributor_ids[i]);
    }
    row.push_back(ids);
    for (double v : g.params) row.push_back(csv::format_double(v));
    out += csv::join_row(row) + "\n";
  }
  return out;
}

}  // namespace fedsig
