#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsig/domain.hpp"

namespace fedsig {

//                 target ADR   other ADRs
//   target drug       a            b
//   other drugs       c            d
struct ContingencyTable {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t c = 0;
  std::uint64_t d = 0;

  std::uint64_t total() const { return a + b + c + d; }
  bool operator==(const ContingencyTable&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct RatioEstimate {
  double value = 0.0;
  Interval ci95;
  // Haldane-Anscombe: 0.5 added to every cell because one was zero.
  bool corrected = false;
};

struct SignalStat {
  std::string drug_code;
  AdrId adr_id;
  ContingencyTable counts;
  RatioEstimate ror;
  RatioEstimate prr;

  bool corrected() const { return ror.corrected; }
};

// Throws UnknownDrug / UnknownAdr when the pair never occurs in `d`.
ContingencyTable contingency(const Dataset& d, std::string_view drug, AdrId adr);

// ROR = ad / bc, CI95 = exp(ln ROR +- 1.96 sqrt(1/a + 1/b + 1/c + 1/d)).
RatioEstimate ror(const ContingencyTable& t);
// PRR = (a/(a+b)) / (c/(c+d)),
// CI95 = exp(ln PRR +- 1.96 sqrt(1/a - 1/(a+b) + 1/c - 1/(c+d))).
RatioEstimate prr(const ContingencyTable& t);

// Every (drug, ADR) pair where the drug and ADR both occur in the dataset.
std::vector<SignalStat> signal_stats(const Dataset& d);

struct SignalComparison {
  SignalStat original;
  SignalStat clean;
};

// Pairs for every (drug, adr) with the drug and ADR present in either
// dataset, sorted by ADR then drug. Throws SchemaMismatch when the datasets
// differ in schema or ADR universe.
std::vector<SignalComparison> compare(const Dataset& original, const Dataset& clean);

std::string comparison_csv(const std::vector<SignalComparison>& rows,
                           const std::vector<std::string>& adr_names);

}  // namespace fedsig
