#include "fedsig/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <limits>
#include <map>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kReserved[] = {"record_id", "patient_id",     "drug_code", "event_date",
                                          "adr_label", "outcome_severe", "quarter"};
constexpr std::string_view kNormPrefix = "norm:";

template <typename Int>
Int parse_integer(std::string_view text, std::string_view what) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kParse, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> header_for(const Dataset& d) {
  std::vector<std::string> header(std::begin(kReserved), std::end(kReserved));
  for (const auto& c : d.schema.columns) header.push_back(c.name);
  if (d.normalized) {
    for (const auto& c : d.schema.columns) header.push_back(std::string(kNormPrefix) + c.name);
  }
  return header;
}

std::string records_csv(const std::vector<AdverseEventRecord>& records, const Dataset& shape) {
  std::string out = csv::join_row(header_for(shape)) + "\n";
  std::vector<std::string> row;
  for (const auto& r : records) {
    row.clear();
    row.push_back(std::to_string(r.record_id));
    row.push_back(r.patient_id);
    row.push_back(r.drug_code);
    row.push_back(r.event_date ? format_date(*r.event_date) : std::string());
    row.push_back(std::to_string(r.adr_label.value));
    row.push_back(r.outcome_severe ? "1" : "0");
    row.push_back(r.report_quarter.to_string());
    for (const auto& v : r.raw_features) row.push_back(v ? csv::format_double(*v) : std::string());
    if (shape.normalized) {
      for (double v : r.features) row.push_back(csv::format_double(v));
    }
    out += csv::join_row(row);
    out += '\n';
  }
  return out;
}

std::vector<AdverseEventRecord> parse_records(std::string_view text, const Dataset& shape) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::kParse, "dataset CSV has no header");
  const auto expected = header_for(shape);
  if (rows.front() != expected) {
    throw Error(ErrorKind::kSchemaMismatch, "dataset CSV header does not match its schema");
  }
  const std::size_t width = shape.schema.size();
  const std::size_t base = std::size(kReserved);
  std::vector<AdverseEventRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != expected.size()) {
      throw Error(ErrorKind::kRaggedRow, "dataset CSV line " + std::to_string(i + 1));
    }
    AdverseEventRecord r;
    r.record_id = parse_integer<std::uint64_t>(row[0], "record_id");
    r.patient_id = row[1];
    r.drug_code = row[2];
    if (!row[3].empty()) {
      r.event_date = parse_iso_date(row[3]);
      if (!r.event_date) throw Error(ErrorKind::kParse, "bad event_date '" + row[3] + "'");
    }
    r.adr_label = AdrId{parse_integer<std::uint32_t>(row[4], "adr_label")};
    if (row[5] != "0" && row[5] != "1") {
      throw Error(ErrorKind::kParse, "bad outcome_severe '" + row[5] + "'");
    }
    r.outcome_severe = row[5] == "1";
    r.report_quarter = Quarter::parse(row[6]);
    r.raw_features.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto& cell = row[base + c];
      if (cell.empty()) {
        r.raw_features.emplace_back();
      } else {
        auto v = csv::parse_double(cell);
        if (!v) throw Error(ErrorKind::kParse, "bad numeric cell '" + cell + "'");
        r.raw_features.emplace_back(*v);
      }
    }
    if (shape.normalized) {
      r.features.reserve(width);
      for (std::size_t c = 0; c < width; ++c) {
        const auto& cell = row[base + width + c];
        if (cell.empty()) {
          r.features.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          auto v = csv::parse_double(cell);
          if (!v) throw Error(ErrorKind::kParse, "bad numeric cell '" + cell + "'");
          r.features.push_back(*v);
        }
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

json schema_to_json(const FeatureSchema& schema) {
  json cols = json::array();
  for (const auto& c : schema.columns) {
    cols.push_back({{"name", c.name},
                    {"kind", c.kind == ColumnKind::kNumeric ? "numeric" : "categorical"},
                    {"lower_bound", c.lower_bound},
                    {"upper_bound", c.upper_bound},
                    {"significant", c.significant},
                    {"source", c.source},
                    {"category", c.category}});
  }
  return json{{"columns", cols}};
}

FeatureSchema schema_from_json(const json& j) {
  FeatureSchema schema;
  try {
    for (const auto& c : j.at("columns")) {
      FeatureColumn col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.value("kind", std::string("numeric"));
      if (kind == "numeric") {
        col.kind = ColumnKind::kNumeric;
      } else if (kind == "categorical") {
        col.kind = ColumnKind::kCategorical;
      } else {
        throw Error(ErrorKind::kParse, "unknown column kind '" + kind + "'");
      }
      col.lower_bound = c.value("lower_bound", 0.0);
      col.upper_bound = c.value("upper_bound", 1.0);
      col.significant = c.value("significant", true);
      col.source = c.value("source", std::string());
      col.category = c.value("category", std::string());
      schema.columns.push_back(std::move(col));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("schema JSON: ") + e.what());
  }
  return schema;
}

FeatureSchema read_schema_file(const std::string& path) {
  try {
    const auto j = json::parse(csv::read_file(path));
    // Accept either a bare schema or a dataset sidecar.
    return schema_from_json(j.contains("schema") ? j.at("schema") : j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "schema file '" + path + "': " + e.what());
  }
}

json dataset_sidecar(const Dataset& d) {
  return json{{"schema", schema_to_json(d.schema)},
              {"adr_universe", d.adr_universe},
              {"provenance", std::string(to_string(d.provenance))},
              {"normalized", d.normalized},
              {"record_count", d.size()}};
}

std::string dataset_csv(const Dataset& d) { return records_csv(d.records, d); }

Dataset parse_dataset(std::string_view csv_text, const json& sidecar) {
  Dataset d;
  try {
    d.schema = schema_from_json(sidecar.at("schema"));
    d.adr_universe = sidecar.at("adr_universe").get<std::vector<std::string>>();
    d.provenance = parse_provenance(sidecar.at("provenance").get<std::string>());
    d.normalized = sidecar.value("normalized", false);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("dataset sidecar: ") + e.what());
  }
  d.records = parse_records(csv_text, d);
  return d;
}

std::string sidecar_path(const std::string& csv_path) {
  return fs::path(csv_path).replace_extension(".json").string();
}

void write_dataset(const Dataset& d, const std::string& csv_path) {
  csv::write_file(csv_path, dataset_csv(d));
  csv::write_file(sidecar_path(csv_path), dataset_sidecar(d).dump(2) + "\n");
}

Dataset read_dataset(const std::string& csv_path) {
  json sidecar;
  try {
    sidecar = json::parse(csv::read_file(sidecar_path(csv_path)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "sidecar for '" + csv_path + "': " + e.what());
  }
  return parse_dataset(csv::read_file(csv_path), sidecar);
}

void write_split(const SplitDataset& split, const std::string& dir) {
  fs::create_directories(dir);
  Dataset shape;
  shape.schema = split.schema;
  shape.normalized = true;
  json tables = json::array();
  for (const auto& sub : split.subdatasets) {
    for (const auto& t : sub) {
      const auto rel = "client" + std::to_string(t.client_id) + "/adr" +
                       std::to_string(t.adr_id.value) + ".csv";
      csv::write_file((fs::path(dir) / rel).string(), records_csv(t.records, shape));
      tables.push_back({{"client", t.client_id},
                        {"adr", t.adr_id.value},
                        {"file", rel},
                        {"size", t.records.size()}});
    }
  }
  const json meta{{"n", split.n},
                  {"m", split.m},
                  {"schema", schema_to_json(split.schema)},
                  {"adr_universe", split.adr_universe},
                  {"tables", tables}};
  csv::write_file((fs::path(dir) / "split.json").string(), meta.dump(2) + "\n");
}

SplitDataset read_split(const std::string& dir) {
  SplitDataset split;
  json meta;
  try {
    meta = json::parse(csv::read_file((fs::path(dir) / "split.json").string()));
    split.n = meta.at("n").get<int>();
    split.m = meta.at("m").get<int>();
    split.schema = schema_from_json(meta.at("schema"));
    split.adr_universe = meta.at("adr_universe").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "split.json in '" + dir + "': " + e.what());
  }
  Dataset shape;
  shape.schema = split.schema;
  shape.normalized = true;
  split.subdatasets.resize(static_cast<std::size_t>(split.n));
  for (const auto& t : meta.at("tables")) {
    AdrTable table;
    table.client_id = t.at("client").get<int>();
    table.adr_id = AdrId{t.at("adr").get<std::uint32_t>()};
    if (table.client_id < 1 || table.client_id > split.n) {
      throw Error(ErrorKind::kParse, "split table client id out of range");
    }
    const auto text = csv::read_file((fs::path(dir) / t.at("file").get<std::string>()).string());
    table.records = parse_records(text, shape);
    split.subdatasets[static_cast<std::size_t>(table.client_id - 1)].push_back(std::move(table));
  }
  for (auto& sub : split.subdatasets) {
    std::sort(sub.begin(), sub.end(),
              [](const AdrTable& a, const AdrTable& b) { return a.adr_id < b.adr_id; });
  }
  return split;
}

json annotation_to_json(const BiasAnnotation& a) {
  json tables = json::array();
  for (const auto& k : a.biased_tables) tables.push_back({{"client", k.client}, {"adr", k.adr.value}});
  return json{{"biased_tables", tables},
              {"biased_record_ids", std::vector<std::uint64_t>(a.biased_record_ids.begin(),
                                                               a.biased_record_ids.end())}};
}

BiasAnnotation annotation_from_json(const json& j) {
  BiasAnnotation a;
  try {
    for (const auto& t : j.at("biased_tables")) {
      a.biased_tables.insert({t.at("client").get<int>(), AdrId{t.at("adr").get<std::uint32_t>()}});
    }
    for (const auto& id : j.at("biased_record_ids")) a.biased_record_ids.insert(id.get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("bias annotation: ") + e.what());
  }
  return a;
}

}  // namespace fedsig::io
