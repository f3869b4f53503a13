#include "fedsig/faers.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig::faers {

namespace fs = std::filesystem;

namespace {

constexpr char kDelimiter = '$';

// Returns the 1-based line of the first malformed UTF-8 sequence, or 0.
std::size_t first_invalid_utf8_line(std::string_view text) {
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '\n') ++line;
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return line;
    }
    if (i + extra >= text.size() + (extra == 0 ? 1 : 0) && extra > 0) return line;
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= text.size() || (static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        return line;
      }
    }
    i += extra + 1;
  }
  return 0;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(kDelimiter, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

fs::path locate(const std::string& directory, std::string_view kind, Quarter q) {
  const auto name = quarter_file_name(kind, q);
  const fs::path exact = fs::path(directory) / name;
  if (fs::exists(exact)) return exact;
  auto upper = name;
  upper.replace(upper.size() - 4, 4, ".TXT");
  const fs::path alt = fs::path(directory) / upper;
  if (fs::exists(alt)) return alt;
  throw Error(ErrorKind::kMissingFile, exact.string());
}

struct SourceField {
  enum class Table { kDemo, kDrug } table;
  std::size_t index;
  bool year_only;
};

bool is_severe_code(std::string_view code) {
  return code == "DE" || code == "LT" || code == "HO" || code == "DS";
}

}  // namespace

std::optional<std::size_t> RawTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

RawTable parse_delimited(std::string_view text, std::string_view label) {
  if (const auto bad = first_invalid_utf8_line(text)) {
    throw Error(ErrorKind::kNonUtf8Input,
                std::string(label) + " line " + std::to_string(bad));
  }
  RawTable table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    // Under a one-column header an empty line is a row holding one empty
    // field; elsewhere blank lines are skipped.
    if (line.empty() && !(have_header && table.header.size() == 1)) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::kRaggedRow, std::string(label) + " line " + std::to_string(line_no) +
                                             ": " + std::to_string(fields.size()) +
                                             " fields, header has " +
                                             std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

std::string serialize_delimited(const RawTable& table) {
  auto join = [](const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) line += kDelimiter;
      line += fields[i];
    }
    return line;
  };
  std::string out = join(table.header) + "\n";
  for (const auto& row : table.rows) out += join(row) + "\n";
  return out;
}

std::string quarter_file_name(std::string_view kind, Quarter q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*s%02dQ%d.txt", static_cast<int>(kind.size()), kind.data(),
                q.year % 100, q.quarter);
  return buf;
}

RawQuarter parse_quarter(const std::string& directory, Quarter q) {
  RawQuarter raw;
  raw.quarter = q;
  auto load = [&](std::string_view kind) {
    const auto path = locate(directory, kind, q);
    return parse_delimited(csv::read_file(path.string()), path.filename().string());
  };
  raw.demo = load("DEMO");
  raw.drug = load("DRUG");
  raw.reac = load("REAC");
  raw.outc = load("OUTC");
  return raw;
}

void write_quarter(const RawQuarter& raw, const std::string& directory) {
  auto save = [&](std::string_view kind, const RawTable& t) {
    csv::write_file((fs::path(directory) / quarter_file_name(kind, raw.quarter)).string(),
                    serialize_delimited(t));
  };
  save("DEMO", raw.demo);
  save("DRUG", raw.drug);
  save("REAC", raw.reac);
  save("OUTC", raw.outc);
}

std::vector<std::string> orphan_primary_ids(const RawQuarter& raw) {
  std::set<std::string> known;
  if (auto c = raw.demo.column("primaryid")) {
    for (const auto& row : raw.demo.rows) known.insert(row[*c]);
  }
  std::set<std::string> orphans;
  for (const auto* t : {&raw.drug, &raw.reac, &raw.outc}) {
    const auto c = t->column("primaryid");
    if (!c) continue;
    for (const auto& row : t->rows) {
      if (!known.contains(row[*c])) orphans.insert(row[*c]);
    }
  }
  return {orphans.begin(), orphans.end()};
}

Dataset assemble_dataset(const RawQuarter& raw, const FeatureSchema& schema) {
  auto require = [](const RawTable& t, std::string_view field, std::string_view table) {
    const auto c = t.column(field);
    if (!c) {
      throw Error(ErrorKind::kSchemaMismatch,
                  std::string(table) + " has no '" + std::string(field) + "' field");
    }
    return *c;
  };
  const auto demo_pid = require(raw.demo, "primaryid", "DEMO");
  const auto reac_pid = require(raw.reac, "primaryid", "REAC");
  const auto reac_pt = require(raw.reac, "pt", "REAC");
  if (const auto orphans = orphan_primary_ids(raw); !orphans.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "primaryid " + orphans.front() + " has no DEMO row");
  }

  std::vector<SourceField> sources;
  for (const auto& col : schema.columns) {
    std::string field = col.source.empty() ? col.name : col.source;
    bool year_only = false;
    if (const auto colon = field.find(':'); colon != std::string::npos) {
      year_only = field.substr(colon + 1) == "year";
      field = field.substr(0, colon);
    }
    if (auto c = raw.demo.column(field)) {
      sources.push_back({SourceField::Table::kDemo, *c, year_only});
    } else if (auto d = raw.drug.column(field)) {
      sources.push_back({SourceField::Table::kDrug, *d, year_only});
    } else {
      throw Error(ErrorKind::kSchemaMismatch,
                  "column '" + col.name + "' has no source field '" + field + "'");
    }
  }

  std::map<std::string, std::size_t> demo_by_pid;
  for (std::size_t i = 0; i < raw.demo.rows.size(); ++i) {
    demo_by_pid.emplace(raw.demo.rows[i][demo_pid], i);
  }
  // Primary-suspect drug row per report, else the first listed.
  std::map<std::string, std::size_t> drug_by_pid;
  if (const auto drug_pid = raw.drug.column("primaryid")) {
    const auto role = raw.drug.column("role_cod");
    for (std::size_t i = 0; i < raw.drug.rows.size(); ++i) {
      const auto& row = raw.drug.rows[i];
      const auto& pid = row[*drug_pid];
      const bool primary = role && row[*role] == "PS";
      auto it = drug_by_pid.find(pid);
      if (it == drug_by_pid.end()) {
        drug_by_pid.emplace(pid, i);
      } else if (primary && !(role && raw.drug.rows[it->second][*role] == "PS")) {
        it->second = i;
      }
    }
  }
  std::set<std::string> severe_pids;
  if (const auto outc_pid = raw.outc.column("primaryid")) {
    const auto code = require(raw.outc, "outc_cod", "OUTC");
    for (const auto& row : raw.outc.rows) {
      if (is_severe_code(row[code])) severe_pids.insert(row[*outc_pid]);
    }
  }

  Dataset d;
  d.schema = schema;
  d.provenance = Provenance::kOriginal;
  {
    std::set<std::string> terms;
    for (const auto& row : raw.reac.rows) terms.insert(row[reac_pt]);
    d.adr_universe.assign(terms.begin(), terms.end());
  }
  const auto caseid = raw.demo.column("caseid");
  const auto event_dt = raw.demo.column("event_dt");
  const auto drugname = raw.drug.column("drugname");

  for (const auto& reac_row : raw.reac.rows) {
    const auto& pid = reac_row[reac_pid];
    const auto& demo_row = raw.demo.rows[demo_by_pid.at(pid)];
    const std::vector<std::string>* drug_row = nullptr;
    if (auto it = drug_by_pid.find(pid); it != drug_by_pid.end()) {
      drug_row = &raw.drug.rows[it->second];
    }
    AdverseEventRecord r;
    r.record_id = d.records.size();
    r.patient_id = caseid ? demo_row[*caseid] : pid;
    r.drug_code = (drug_row && drugname) ? (*drug_row)[*drugname] : std::string();
    if (event_dt) r.event_date = parse_compact_date(demo_row[*event_dt]);
    r.adr_label = *d.find_adr(reac_row[reac_pt]);
    r.outcome_severe = severe_pids.contains(pid);
    r.report_quarter = raw.quarter;
    r.raw_features.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& src = sources[c];
      const std::vector<std::string>* row =
          src.table == SourceField::Table::kDemo ? &demo_row : drug_row;
      if (!row || (*row)[src.index].empty()) {
        r.raw_features.emplace_back();
        continue;
      }
      std::string_view text = (*row)[src.index];
      const auto& col = schema.columns[c];
      if (col.kind == ColumnKind::kCategorical) {
        r.raw_features.emplace_back(text == col.category ? 1.0 : 0.0);
      } else {
        if (src.year_only) text = text.substr(0, 4);
        r.raw_features.push_back(csv::parse_double(text));
      }
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

FeatureSchema default_schema() {
  auto numeric = [](std::string name, std::string source, double lo, double hi, bool sig) {
    return FeatureColumn{std::move(name), ColumnKind::kNumeric, lo, hi, sig, std::move(source), {}};
  };
  auto onehot = [](std::string name, std::string source, std::string category, bool sig) {
    return FeatureColumn{std::move(name), ColumnKind::kCategorical, 0.0, 1.0, sig,
                         std::move(source), std::move(category)};
  };
  FeatureSchema s;
  s.columns = {
      numeric("age", "age", 0.0, 120.0, true),
      numeric("weight", "wt", 0.5, 300.0, true),
      numeric("report_year", "rept_dt:year", 2010.0, 2024.0, true),
      onehot("sex_f", "sex", "F", true),
      onehot("sex_m", "sex", "M", true),
      onehot("route_oral", "route", "ORAL", true),
      onehot("route_iv", "route", "INTRAVENOUS", true),
      onehot("route_sc", "route", "SUBCUTANEOUS", true),
      onehot("reporter_physician", "occp_cod", "MD", true),
      onehot("reporter_consumer", "occp_cod", "CN", false),
      onehot("reporter_us", "reporter_country", "US", false),
  };
  return s;
}

}  // namespace fedsig::faers
