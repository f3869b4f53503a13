#include "fedsig/bias.hpp"

#include <algorithm>
#include <cmath>

#include "fedsig/error.hpp"
#include "fedsig/rng.hpp"

namespace fedsig {

namespace {

// Draws `k` distinct positions from [0, n) by a partial Fisher-Yates shuffle.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t touched_count(std::size_t eligible, double intensity) {
  return std::min(eligible, static_cast<std::size_t>(std::llround(intensity * static_cast<double>(eligible))));
}

}  // namespace

std::string_view to_string(BiasMode mode) {
  switch (mode) {
    case BiasMode::kLabelFlip: return "label_flip";
    case BiasMode::kFeatureShift: return "feature_shift";
    case BiasMode::kUnderReport: return "under_report";
  }
  return "label_flip";
}

BiasMode parse_bias_mode(std::string_view text) {
  for (auto m : {BiasMode::kLabelFlip, BiasMode::kFeatureShift, BiasMode::kUnderReport}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown bias mode '" + std::string(text) + "'");
}

std::vector<TableKey> resolve_targets(const SplitDataset& split, const BiasSpec& spec) {
  if (!spec.tables.empty()) {
    std::vector<TableKey> keys = spec.tables;
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const auto& k : keys) {
      if (!split.find(k)) {
        throw Error(ErrorKind::kInvalidArgument, "no table (client " + std::to_string(k.client) +
                                                     ", adr " + std::to_string(k.adr.value) + ")");
      }
    }
    return keys;
  }
  if (spec.table_fraction < 0.0 || spec.table_fraction > 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "table_fraction must lie in [0,1]");
  }
  const auto all = split.table_keys();
  Rng rng = Rng(spec.seed).fork("targets");
  const auto picked = choose(all.size(), touched_count(all.size(), spec.table_fraction), rng);
  std::vector<TableKey> keys;
  for (auto p : picked) keys.push_back(all[p]);
  return keys;
}

std::pair<SplitDataset, BiasAnnotation> inject_bias(const SplitDataset& split, const BiasSpec& spec) {
  if (spec.intensity < 0.0 || spec.intensity > 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "intensity must lie in [0,1]");
  }
  std::vector<std::pair<std::size_t, double>> shifts;
  if (spec.mode == BiasMode::kFeatureShift) {
    for (const auto& s : spec.shifts) {
      const auto c = split.schema.index_of(s.column);
      if (!c) throw Error(ErrorKind::kInvalidArgument, "unknown shift column '" + s.column + "'");
      shifts.emplace_back(*c, s.delta);
    }
  }
  const auto targets = resolve_targets(split, spec);
  if (targets.empty()) throw Error(ErrorKind::kEmptyTarget, "bias spec selects no tables");

  SplitDataset out = split;
  BiasAnnotation truth;
  const Rng base(spec.seed);
  for (const auto& key : targets) {
    AdrTable& table = *out.find(key);
    Rng rng = base.fork((static_cast<std::uint64_t>(key.client) << 32) | key.adr.value);
    std::vector<std::size_t> eligible;
    for (std::size_t r = 0; r < table.records.size(); ++r) {
      if (spec.mode != BiasMode::kUnderReport || table.records[r].outcome_severe) eligible.push_back(r);
    }
    const auto picked = choose(eligible.size(), touched_count(eligible.size(), spec.intensity), rng);
    if (picked.empty()) continue;
    std::vector<bool> hit(table.records.size(), false);
    for (auto p : picked) {
      hit[eligible[p]] = true;
      truth.biased_record_ids.insert(table.records[eligible[p]].record_id);
    }
    truth.biased_tables.insert(key);
    switch (spec.mode) {
      case BiasMode::kLabelFlip:
        for (std::size_t r = 0; r < hit.size(); ++r) {
          if (hit[r]) table.records[r].outcome_severe = !table.records[r].outcome_severe;
        }
        break;
      case BiasMode::kFeatureShift:
        for (std::size_t r = 0; r < hit.size(); ++r) {
          if (!hit[r]) continue;
          auto& f = table.records[r].features;
          for (const auto& [c, delta] : shifts) f[c] = std::clamp(f[c] + delta, 0.0, 1.0);
        }
        break;
      case BiasMode::kUnderReport: {
        std::vector<AdverseEventRecord> kept;
        for (std::size_t r = 0; r < hit.size(); ++r) {
          if (!hit[r]) kept.push_back(std::move(table.records[r]));
        }
        table.records = std::move(kept);
        break;
      }
    }
  }
  // A table emptied by deletion is dropped, keeping the split's invariant.
  for (auto& sub : out.subdatasets) {
    std::erase_if(sub, [](const AdrTable& t) { return t.records.empty(); });
  }
  return {std::move(out), std::move(truth)};
}

}  // namespace fedsig
