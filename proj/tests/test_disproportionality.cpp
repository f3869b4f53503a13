#include <doctest.h>

#include <cmath>
#include <set>

#include "fedsig/disproportionality.hpp"
#include "fedsig/error.hpp"
#include "fedsig/pfed_split.hpp"
#include "fedsig/synth.hpp"
#include "support.hpp"

using namespace fedsig;

namespace {

Dataset small_dataset() {
  Dataset d;
  d.adr_universe = testing::adr_names(2);
  const char* drugs[] = {"A", "A", "A", "B", "B", "C"};
  const std::uint32_t adrs[] = {0, 0, 1, 0, 1, 1};
  for (int i = 0; i < 6; ++i) d.records.push_back(testing::record(i, "P", drugs[i], adrs[i], false, {}));
  return d;
}

}  // namespace

TEST_CASE("contingency counts") {
  const auto t = contingency(small_dataset(), "A", AdrId{0});
  CHECK(t == ContingencyTable{2, 1, 1, 2});
  CHECK(t.total() == 6);
}

TEST_CASE("unknown drug or ADR") {
  const auto d = small_dataset();
  try {
    contingency(d, "Z", AdrId{0});
    FAIL("expected UnknownDrug");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnknownDrug);
  }
  try {
    contingency(d, "A", AdrId{5});
    FAIL("expected UnknownAdr");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnknownAdr);
  }
}

TEST_CASE("ROR hand cases") {
  for (std::uint64_t k : {1, 3, 50}) {
    const auto r = ror({k, k, k, k});
    CHECK(r.value == 1.0);
    CHECK_FALSE(r.corrected);
    CHECK(r.ci95.lo < 1.0);
    CHECK(r.ci95.hi > 1.0);
  }
  const auto r = ror({10, 90, 100, 9800});
  CHECK(r.value == doctest::Approx(98000.0 / 9000.0).epsilon(1e-14));
  CHECK(r.value == doctest::Approx(10.8889).epsilon(1e-5));
  const double se = std::sqrt(1 / 10.0 + 1 / 90.0 + 1 / 100.0 + 1 / 9800.0);
  CHECK(r.ci95.lo == doctest::Approx(std::exp(std::log(r.value) - 1.96 * se)).epsilon(1e-14));
  CHECK(r.ci95.hi == doctest::Approx(std::exp(std::log(r.value) + 1.96 * se)).epsilon(1e-14));
  const auto z = ror({0, 10, 5, 100});
  CHECK(z.corrected);
  CHECK(z.value == doctest::Approx(0.5 * 100.5 / (10.5 * 5.5)).epsilon(1e-14));
  CHECK(z.value == doctest::Approx(0.8701).epsilon(1e-4));
}

TEST_CASE("PRR hand cases") {
  CHECK(prr({1, 1, 1, 1}).value == 1.0);
  CHECK(prr({2, 8, 20, 80}).value == doctest::Approx(1.0).epsilon(1e-15));
  const auto p = prr({10, 90, 100, 9800});
  CHECK(p.value == doctest::Approx(9.9).epsilon(1e-14));
  const double se = std::sqrt(1 / 10.0 - 1 / 100.0 + 1 / 100.0 - 1 / 9900.0);
  CHECK(p.ci95.lo == doctest::Approx(std::exp(std::log(9.9) - 1.96 * se)).epsilon(1e-12));
  const auto z = prr({0, 0, 5, 100});
  CHECK(z.corrected);
  CHECK(std::isfinite(z.value));
  CHECK(z.value == doctest::Approx((0.5 / 1.0) / (5.5 / 106.0)).epsilon(1e-14));
}

TEST_CASE("ratios are invariant under integer scaling and sit on the same side of 1") {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const ContingencyTable t{1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(500)};
    const auto k = 2 + rng.below(5);
    const ContingencyTable s{t.a * k, t.b * k, t.c * k, t.d * k};
    CHECK(ror(s).value == doctest::Approx(ror(t).value).epsilon(1e-14));
    CHECK(prr(s).value == doctest::Approx(prr(t).value).epsilon(1e-14));
    const double r = ror(t).value, p = prr(t).value;
    CHECK(((r >= p && p >= 1.0) || (r <= p && p <= 1.0)));
    CHECK(ror(t).ci95.lo <= r);
    CHECK(ror(t).ci95.hi >= r);
  }
}

TEST_CASE("compare against itself pairs equal stats for every drug and ADR") {
  synth::SynthConfig cfg;
  cfg.size = 1500;
  Rng rng(12);
  const auto d = preprocess(synth::generate(cfg, synth::default_schema(), rng).first).dataset;
  std::set<std::string> drugs;
  for (const auto& r : d.records) drugs.insert(r.drug_code);
  const auto rows = compare(d, d);
  CHECK(rows.size() == 10 * drugs.size());
  CHECK(signal_stats(d).size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].original.counts == rows[i].clean.counts);
    CHECK(rows[i].original.ror.value == rows[i].clean.ror.value);
    if (i > 0) {
      const auto& p = rows[i - 1].original;
      const auto& q = rows[i].original;
      CHECK((p.adr_id < q.adr_id || (p.adr_id == q.adr_id && p.drug_code < q.drug_code)));
    }
  }
  const auto csv = comparison_csv(rows, d.adr_universe);
  CHECK(csv.find("ADR1") != std::string::npos);

  auto other = d;
  other.adr_universe.push_back("extra");
  try {
    compare(d, other);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchemaMismatch);
  }
}

TEST_CASE("removing under-reported severe non-target reports raises ROR") {
  // Original: 10 severe target-drug reports of ADR1 and 40 of other drugs; a
  // biased client deleted half of the other-drug ADR1 reports.
  Dataset clean;
  clean.adr_universe = testing::adr_names(2);
  std::uint64_t id = 0;
  auto add = [&](Dataset& d, const char* drug, std::uint32_t adr, int count) {
    for (int i = 0; i < count; ++i) d.records.push_back(testing::record(id++, "P", drug, adr, true, {}));
  };
  add(clean, "T", 0, 10);
  add(clean, "T", 1, 20);
  add(clean, "O", 0, 20);
  add(clean, "O", 1, 200);
  Dataset original = clean;
  add(original, "O", 0, 20);
  const auto rows = compare(original, clean);
  for (const auto& row : rows) {
    if (row.original.drug_code == "T" && row.original.adr_id == AdrId{0}) {
      CHECK(row.clean.ror.value > row.original.ror.value);
      CHECK(row.clean.prr.value > row.original.prr.value);
    }
  }
}
