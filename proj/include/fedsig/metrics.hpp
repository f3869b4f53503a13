#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedsig/domain.hpp"
#include "fedsig/error.hpp"

namespace fedsig::metrics {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Scores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Throws ShapeMismatch on unequal lengths.
ConfusionMatrix confusion(std::span<const bool> predicted, std::span<const bool> truth);

// Set form: `universe` is the evaluated population; predicted and truth must
// be subsets of it (ShapeMismatch otherwise).
template <typename T>
ConfusionMatrix confusion(const std::set<T>& predicted, const std::set<T>& truth,
                          const std::set<T>& universe);

// A ratio with a zero denominator is reported as 0.
Scores scores(const ConfusionMatrix& cm);

// Probability that a random positive outscores a random negative, ties 1/2.
// Throws SingleClass when either class is absent.
double auc(std::span<const double> scores, std::span<const bool> labels);

struct MulticlassReport {
  Scores macro;            // one-vs-rest per class, then averaged
  double macro_auc = 0.0;  // over classes present with both labels
  double plain_accuracy = 0.0;
  std::vector<ConfusionMatrix> per_class;
};

// probs is row-major n x m; labels and predictions index classes.
MulticlassReport multiclass(std::span<const double> probs, std::size_t n_classes,
                            std::span<const std::uint32_t> labels);

nlohmann::json to_json(const Scores& s);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MulticlassReport& r);

template <typename T>
ConfusionMatrix confusion(const std::set<T>& predicted, const std::set<T>& truth,
                          const std::set<T>& universe) {
  for (const auto* s : {&predicted, &truth}) {
    for (const auto& x : *s) {
      if (!universe.contains(x)) throw Error(ErrorKind::kShapeMismatch, "item outside the universe");
    }
  }
  ConfusionMatrix cm;
  for (const auto& x : universe) {
    const bool pp = predicted.contains(x);
    const bool tt = truth.contains(x);
    if (pp && tt) ++cm.tp;
    else if (pp) ++cm.fp;
    else if (tt) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

}  // namespace fedsig::metrics
