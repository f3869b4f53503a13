// Deliberately naive re-implementations of the counting and scoring
// operations, swept over random small instances.
#pragma once

#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "fedsig/disproportionality.hpp"
#include "fedsig/metrics.hpp"
#include "fedsig/rng.hpp"
#include "support.hpp"

namespace fedsig::testing::oracle {

struct Counts {
  long a = 0, b = 0, c = 0, d = 0;
};

inline Counts brute_counts(const Dataset& ds, const std::string& drug, std::uint32_t adr) {
  Counts k;
  for (const auto& r : ds.records) {
    const int on_drug = r.drug_code == drug ? 1 : 0;
    const int on_adr = r.adr_label.value == adr ? 1 : 0;
    k.a += on_drug * on_adr;
    k.b += on_drug * (1 - on_adr);
    k.c += (1 - on_drug) * on_adr;
    k.d += (1 - on_drug) * (1 - on_adr);
  }
  return k;
}

inline double brute_ror(Counts k) {
  double a = k.a, b = k.b, c = k.c, d = k.d;
  if (k.a == 0 || k.b == 0 || k.c == 0 || k.d == 0) a += 0.5, b += 0.5, c += 0.5, d += 0.5;
  return (a / b) / (c / d);
}

inline double brute_prr(Counts k) {
  double a = k.a, b = k.b, c = k.c, d = k.d;
  if (k.a == 0 || k.b == 0 || k.c == 0 || k.d == 0) a += 0.5, b += 0.5, c += 0.5, d += 0.5;
  return a * (c + d) / ((a + b) * c);
}

inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

inline bool close(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }

inline Dataset random_dataset(Rng& rng) {
  Dataset d;
  d.adr_universe = testing::adr_names(3);
  const auto n = 4 + rng.below(40);
  for (std::uint64_t i = 0; i < n; ++i) {
    d.records.push_back(testing::record(i, "P" + std::to_string(i), "D" + std::to_string(rng.below(3)),
                                        static_cast<std::uint32_t>(rng.below(3)), false, {}));
  }
  // Guarantee the queried drug and ADR exist.
  d.records[0].drug_code = "D0";
  d.records[0].adr_label = AdrId{0};
  return d;
}


// Each sweep returns the number of instances that disagree with the oracle.
inline int sweep_disproportionality(std::uint64_t seed, int instances) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < instances; ++trial) {
    const auto d = random_dataset(rng);
    const auto k = brute_counts(d, "D0", 0);
    const auto t = contingency(d, "D0", AdrId{0});
    const bool counts = static_cast<long>(t.a) == k.a && static_cast<long>(t.b) == k.b &&
                        static_cast<long>(t.c) == k.c && static_cast<long>(t.d) == k.d;
    bad += !(counts && close(ror(t).value, brute_ror(k)) && close(prr(t).value, brute_prr(k)));
  }
  return bad;
}

inline int sweep_confusion(std::uint64_t seed, int instances) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < instances; ++trial) {
    const auto n = 1 + rng.below(30);
    std::unique_ptr<bool[]> p(new bool[n]);
    std::unique_ptr<bool[]> t(new bool[n]);
    std::set<int> ps, ts, universe;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      p[i] = rng.bernoulli(0.5);
      t[i] = rng.bernoulli(0.5);
      universe.insert(static_cast<int>(i));
      if (p[i]) ps.insert(static_cast<int>(i));
      if (t[i]) ts.insert(static_cast<int>(i));
      tp += p[i] && t[i];
      fp += p[i] && !t[i];
      tn += !p[i] && !t[i];
      fn += !p[i] && t[i];
    }
    const auto cm = metrics::confusion(std::span<const bool>(p.get(), n), std::span<const bool>(t.get(), n));
    const auto s = metrics::scores(cm);
    const double acc = double(tp + tn) / double(n);
    const double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const bool ok = cm == metrics::confusion(ps, ts, universe) && static_cast<long>(cm.tp) == tp &&
                    static_cast<long>(cm.fp) == fp && static_cast<long>(cm.tn) == tn &&
                    static_cast<long>(cm.fn) == fn && close(s.accuracy, acc) && close(s.precision, prec) &&
                    close(s.recall, rec) && close(s.f1, f1);
    bad += !ok;
  }
  return bad;
}

inline int sweep_auc(std::uint64_t seed, int instances) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < instances; ++trial) {
    const auto n = 2 + rng.below(25);
    std::vector<double> s(n);
    std::vector<int> y(n);
    std::unique_ptr<bool[]> labels(new bool[n]);
    for (std::uint64_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6)) / 5.0;  // coarse grid forces ties
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    for (std::uint64_t i = 0; i < n; ++i) labels[i] = y[i] == 1;
    bad += !close(metrics::auc(s, std::span<const bool>(labels.get(), n)), brute_auc(s, y));
  }
  return bad;
}

}  // namespace fedsig::testing::oracle
