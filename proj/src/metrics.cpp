#include "fedsig/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

namespace fedsig::metrics {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ConfusionMatrix confusion(std::span<const bool> predicted, std::span<const bool> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::kShapeMismatch, "prediction and truth lengths differ");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && truth[i]) ++cm.tp;
    else if (predicted[i]) ++cm.fp;
    else if (truth[i]) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

Scores scores(const ConfusionMatrix& cm) {
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  Scores s;
  s.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

double auc(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::kShapeMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney: sum of positive ranks, tied groups sharing their mean rank.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += mean_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorKind::kSingleClass, "AUC needs both classes");
  const auto np = static_cast<double>(positives);
  const auto nn = static_cast<double>(negatives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MulticlassReport multiclass(std::span<const double> probs, std::size_t n_classes,
                            std::span<const std::uint32_t> labels) {
  const std::size_t n = labels.size();
  if (n_classes == 0 || probs.size() != n * n_classes) {
    throw Error(ErrorKind::kShapeMismatch, "probability matrix does not match labels");
  }
  std::vector<std::uint32_t> predicted(n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.subspan(i * n_classes, n_classes);
    predicted[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += predicted[i] == labels[i] ? 1 : 0;
  }
  MulticlassReport r;
  r.plain_accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
  std::size_t auc_classes = 0;
  std::vector<double> column(n);
  // std::vector<bool> has no contiguous storage to view as span<const bool>.
  std::unique_ptr<bool[]> truth(new bool[n]);
  for (std::size_t c = 0; c < n_classes; ++c) {
    ConfusionMatrix cm;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = predicted[i] == c;
      const bool t = labels[i] == c;
      pos += t ? 1 : 0;
      if (p && t) ++cm.tp;
      else if (p) ++cm.fp;
      else if (t) ++cm.fn;
      else ++cm.tn;
      column[i] = probs[i * n_classes + c];
    }
    r.per_class.push_back(cm);
    const auto s = scores(cm);
    r.macro.accuracy += s.accuracy;
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
    if (pos > 0 && pos < n) {
      for (std::size_t i = 0; i < n; ++i) truth[i] = labels[i] == c;
      r.macro_auc += auc(column, std::span<const bool>(truth.get(), n));
      ++auc_classes;
    }
  }
  const auto k = static_cast<double>(n_classes);
  r.macro.accuracy /= k;
  r.macro.precision /= k;
  r.macro.recall /= k;
  r.macro.f1 /= k;
  if (auc_classes) r.macro_auc /= static_cast<double>(auc_classes);
  return r;
}

nlohmann::json to_json(const Scores& s) {
  return nlohmann::json{{"accuracy", s.accuracy}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return nlohmann::json{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::json to_json(const MulticlassReport& r) {
  nlohmann::json j = to_json(r.macro);
  j["auc"] = r.macro_auc;
  j["plain_accuracy"] = r.plain_accuracy;
  j["averaging"] = "macro one-vs-rest";
  return j;
}

}  // namespace fedsig::metrics
