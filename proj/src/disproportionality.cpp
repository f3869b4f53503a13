#include "fedsig/disproportionality.hpp"

#include <cmath>
#include <map>
#include <set>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig {

namespace {

constexpr double kZ95 = 1.96;

struct Cells {
  double a, b, c, d;
  bool corrected;
};

Cells corrected_cells(const ContingencyTable& t) {
  const bool zero = t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0;
  const double add = zero ? 0.5 : 0.0;
  return {static_cast<double>(t.a) + add, static_cast<double>(t.b) + add,
          static_cast<double>(t.c) + add, static_cast<double>(t.d) + add, zero};
}

ContingencyTable count(const Dataset& d, std::string_view drug, AdrId adr) {
  ContingencyTable t;
  for (const auto& r : d.records) {
    const bool on_drug = r.drug_code == drug;
    const bool on_adr = r.adr_label == adr;
    if (on_drug && on_adr) {
      ++t.a;
    } else if (on_drug) {
      ++t.b;
    } else if (on_adr) {
      ++t.c;
    } else {
      ++t.d;
    }
  }
  return t;
}

SignalStat stat_for(const Dataset& d, const std::string& drug, AdrId adr) {
  SignalStat s;
  s.drug_code = drug;
  s.adr_id = adr;
  s.counts = count(d, drug, adr);
  s.ror = ror(s.counts);
  s.prr = prr(s.counts);
  return s;
}

}  // namespace

ContingencyTable contingency(const Dataset& d, std::string_view drug, AdrId adr) {
  bool drug_seen = false;
  bool adr_seen = false;
  for (const auto& r : d.records) {
    drug_seen = drug_seen || r.drug_code == drug;
    adr_seen = adr_seen || r.adr_label == adr;
  }
  if (!drug_seen) throw Error(ErrorKind::kUnknownDrug, "drug '" + std::string(drug) + "' not in dataset");
  if (!adr_seen) throw Error(ErrorKind::kUnknownAdr, "ADR " + std::to_string(adr.value) + " not in dataset");
  return count(d, drug, adr);
}

RatioEstimate ror(const ContingencyTable& t) {
  const auto x = corrected_cells(t);
  RatioEstimate r;
  r.corrected = x.corrected;
  r.value = (x.a * x.d) / (x.b * x.c);
  const double se = std::sqrt(1.0 / x.a + 1.0 / x.b + 1.0 / x.c + 1.0 / x.d);
  r.ci95 = {std::exp(std::log(r.value) - kZ95 * se), std::exp(std::log(r.value) + kZ95 * se)};
  return r;
}

RatioEstimate prr(const ContingencyTable& t) {
  const auto x = corrected_cells(t);
  RatioEstimate r;
  r.corrected = x.corrected;
  r.value = (x.a / (x.a + x.b)) / (x.c / (x.c + x.d));
  const double se = std::sqrt(1.0 / x.a - 1.0 / (x.a + x.b) + 1.0 / x.c - 1.0 / (x.c + x.d));
  r.ci95 = {std::exp(std::log(r.value) - kZ95 * se), std::exp(std::log(r.value) + kZ95 * se)};
  return r;
}

std::vector<SignalStat> signal_stats(const Dataset& d) {
  std::set<std::string> drugs;
  std::set<AdrId> adrs;
  for (const auto& r : d.records) {
    drugs.insert(r.drug_code);
    adrs.insert(r.adr_label);
  }
  std::vector<SignalStat> out;
  for (const auto& adr : adrs) {
    for (const auto& drug : drugs) out.push_back(stat_for(d, drug, adr));
  }
  return out;
}

std::vector<SignalComparison> compare(const Dataset& original, const Dataset& clean) {
  if (original.schema != clean.schema || original.adr_universe != clean.adr_universe) {
    throw Error(ErrorKind::kSchemaMismatch, "datasets differ in schema or ADR universe");
  }
  std::set<std::string> drugs;
  std::set<AdrId> adrs;
  for (const auto* d : {&original, &clean}) {
    for (const auto& r : d->records) {
      drugs.insert(r.drug_code);
      adrs.insert(r.adr_label);
    }
  }
  std::vector<SignalComparison> out;
  for (const auto& adr : adrs) {
    for (const auto& drug : drugs) {
      out.push_back({stat_for(original, drug, adr), stat_for(clean, drug, adr)});
    }
  }
  return out;
}

std::string comparison_csv(const std::vector<SignalComparison>& rows,
                           const std::vector<std::string>& adr_names) {
  const std::vector<std::string> header{
      "adr",           "drug",           "ror_orig",        "ror_clean",       "prr_orig",
      "prr_clean",     "ror_orig_ci_lo", "ror_orig_ci_hi",  "ror_clean_ci_lo", "ror_clean_ci_hi",
      "prr_orig_ci_lo", "prr_orig_ci_hi", "prr_clean_ci_lo", "prr_clean_ci_hi", "corrected_orig",
      "corrected_clean"};
  std::string out = csv::join_row(header) + "\n";
  auto f = [](double v) { return csv::format_double(v); };
  for (const auto& row : rows) {
    const auto id = row.original.adr_id.value;
    const std::vector<std::string> cells{
        id < adr_names.size() ? adr_names[id] : std::to_string(id),
        row.original.drug_code,
        f(row.original.ror.value),
        f(row.clean.ror.value),
        f(row.original.prr.value),
        f(row.clean.prr.value),
        f(row.original.ror.ci95.lo),
        f(row.original.ror.ci95.hi),
        f(row.clean.ror.ci95.lo),
        f(row.clean.ror.ci95.hi),
        f(row.original.prr.ci95.lo),
        f(row.original.prr.ci95.hi),
        f(row.clean.prr.ci95.lo),
        f(row.clean.prr.ci95.hi),
        row.original.corrected() ? "1" : "0",
        row.clean.corrected() ? "1" : "0"};
    out += csv::join_row(cells) + "\n";
  }
  return out;
}

}  // namespace fedsig
