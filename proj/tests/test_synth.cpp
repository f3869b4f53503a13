#include <doctest.h>

#include <map>

#include "fedsig/domain.hpp"
#include "fedsig/synth.hpp"

using namespace fedsig;

TEST_CASE("default schema has 38 columns, 30 significant") {
  const auto s = synth::default_schema();
  CHECK(s.size() == 38);
  std::size_t significant = 0;
  for (const auto& c : s.columns) significant += c.significant;
  CHECK(significant == 30);
  CHECK(validate_schema(s).empty());
}

TEST_CASE("default configuration gives 5868 records over 10 ADRs") {
  Rng rng(0);
  const auto [d, truth] = synth::generate({}, synth::default_schema(), rng);
  CHECK(d.size() == 5868);
  CHECK(d.adr_universe.size() == 10);
  CHECK(truth.empty());
  CHECK(d.provenance == Provenance::kOriginal);
  CHECK_FALSE(d.normalized);
  std::map<std::uint32_t, int> per_adr;
  for (const auto& r : d.records) ++per_adr[r.adr_label.value];
  CHECK(per_adr.size() == 10);
  CHECK(validate_dataset(d).empty());
}

TEST_CASE("size equal to the ADR count gives one record per ADR") {
  synth::SynthConfig cfg;
  cfg.size = 10;
  Rng rng(4);
  const auto d = synth::generate(cfg, synth::default_schema(), rng).first;
  REQUIRE(d.size() == 10);
  std::map<std::uint32_t, int> per_adr;
  for (const auto& r : d.records) ++per_adr[r.adr_label.value];
  CHECK(per_adr.size() == 10);
}

TEST_CASE("generation is deterministic in the seed") {
  synth::SynthConfig cfg;
  cfg.size = 300;
  Rng a(17), b(17), c(18);
  const auto da = synth::generate(cfg, synth::default_schema(), a).first;
  CHECK(da == synth::generate(cfg, synth::default_schema(), b).first);
  CHECK_FALSE(da == synth::generate(cfg, synth::default_schema(), c).first);
}

TEST_CASE("signal drug is over-represented among severe reports") {
  Rng rng(3);
  const auto d = synth::generate({}, synth::default_schema(), rng).first;
  double severe = 0, severe_signal = 0, mild = 0, mild_signal = 0;
  for (const auto& r : d.records) {
    const bool signal = r.drug_code == "DRUG01";
    (r.outcome_severe ? severe : mild) += 1;
    (r.outcome_severe ? severe_signal : mild_signal) += signal;
  }
  CHECK(severe_signal / severe > 3 * (mild_signal / mild));
}
