#include "fedsig/cli/config.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"
#include "fedsig/predictor/params_io.hpp"

namespace fedsig::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"seed", "source", "input", "output", "schema", "quarters", "clients", "clean", "model"}},
      {"synth",
       {"size", "n_adr", "mean_spacing", "severity_intercept", "severity_weight",
        "severity_category_weight", "informative", "n_drugs", "duplicate_rate", "outlier_rate",
        "adr_weights"}},
      {"bias", {"mode", "tables", "table_fraction", "intensity", "shifts", "seed"}},
      {"detection", {"epsilon", "learning_rate", "epochs", "min_table_size", "size_weighted"}},
      {"predictor",
       {"learning_rate", "epochs", "tokens", "d_model", "n_heads", "conv_kernel", "conv1_channels",
        "conv2_channels", "pool_width", "lstm_hidden", "signal_threshold", "init_gain"}},
  };
  return keys;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const auto v = csv::parse_double(text);
  if (!v) throw Error(ErrorKind::kInvalidArgument, "config " + key + ": not a number: '" + text + "'");
  return *v;
}

long long to_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorKind::kInvalidArgument, "config " + key + ": not an integer: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorKind::kInvalidArgument, "config " + key + ": not a boolean: '" + text + "'");
}

// Key/value access over one section with the section name in messages.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> text(const std::string& key) const {
    if (!tree_) return std::nullopt;
    if (auto v = tree_->get_optional<std::string>(key)) return *v;
    return std::nullopt;
  }
  void str(const std::string& key, std::string& out) const {
    if (auto v = text(key)) out = *v;
  }
  template <typename T>
  void integer(const std::string& key, T& out) const {
    if (auto v = text(key)) out = static_cast<T>(to_int(name_ + "." + key, *v));
  }
  void real(const std::string& key, double& out) const {
    if (auto v = text(key)) out = to_double(name_ + "." + key, *v);
  }
  void boolean(const std::string& key, bool& out) const {
    if (auto v = text(key)) out = to_bool(name_ + "." + key, *v);
  }
  bool present() const { return tree_ != nullptr; }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

Section section(const pt::ptree& root, const std::string& name) {
  auto child = root.get_child_optional(name);
  return Section(child ? &*child : nullptr, name);
}

void check_keys(const pt::ptree& root) {
  for (const auto& [name, body] : root) {
    auto it = known_keys().find(name);
    if (it == known_keys().end()) {
      throw Error(ErrorKind::kInvalidArgument, "config: unknown section [" + name + "]");
    }
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::kInvalidArgument, "config: key '" + name + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw Error(ErrorKind::kInvalidArgument, "config: unknown key " + name + "." + key);
      }
    }
  }
}

BiasSpec parse_bias(const Section& s) {
  BiasSpec b;
  if (auto mode = s.text("mode")) b.mode = parse_bias_mode(*mode);
  if (auto tables = s.text("tables")) {
    for (const auto& item : split_list(*tables, ',')) {
      const auto parts = split_list(item, ':');
      if (parts.size() != 2) {
        throw Error(ErrorKind::kInvalidArgument, "config bias.tables: expected client:adr, got '" + item + "'");
      }
      b.tables.push_back({static_cast<ClientId>(to_int("bias.tables", parts[0])),
                          AdrId{static_cast<std::uint32_t>(to_int("bias.tables", parts[1]))}});
    }
  }
  s.real("table_fraction", b.table_fraction);
  s.real("intensity", b.intensity);
  if (auto shifts = s.text("shifts")) {
    for (const auto& item : split_list(*shifts, ',')) {
      const auto cut = item.rfind(':');
      if (cut == std::string::npos) {
        throw Error(ErrorKind::kInvalidArgument, "config bias.shifts: expected column:delta, got '" + item + "'");
      }
      b.shifts.push_back({item.substr(0, cut), to_double("bias.shifts", item.substr(cut + 1))});
    }
  }
  return b;
}

}  // namespace

PipelineConfig parse_config(const std::string& ini_text) {
  pt::ptree root;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("config: ") + e.what());
  }
  check_keys(root);

  PipelineConfig c;
  const auto run = section(root, "run");
  run.integer("seed", c.seed);
  run.str("source", c.source);
  if (c.source != "synth" && c.source != "faers" && c.source != "dataset") {
    throw Error(ErrorKind::kInvalidArgument, "config run.source must be synth, faers or dataset");
  }
  run.str("input", c.input);
  run.str("output", c.output);
  run.str("schema", c.schema);
  run.str("clean", c.clean);
  run.str("model", c.model);
  run.integer("clients", c.clients);
  if (auto q = run.text("quarters")) {
    for (const auto& item : split_list(*q, ',')) c.quarters.push_back(Quarter::parse(item));
  }

  const auto sy = section(root, "synth");
  sy.integer("size", c.synth.size);
  sy.integer("n_adr", c.synth.n_adr);
  sy.real("mean_spacing", c.synth.mean_spacing);
  sy.real("severity_intercept", c.synth.severity_intercept);
  sy.real("severity_weight", c.synth.severity_weight);
  sy.real("severity_category_weight", c.synth.severity_category_weight);
  sy.integer("informative", c.synth.informative);
  sy.integer("n_drugs", c.synth.n_drugs);
  sy.real("duplicate_rate", c.synth.duplicate_rate);
  sy.real("outlier_rate", c.synth.outlier_rate);
  if (auto w = sy.text("adr_weights")) {
    for (const auto& item : split_list(*w, ',')) c.synth.adr_weights.push_back(to_double("synth.adr_weights", item));
  }

  const auto bias = section(root, "bias");
  bool bias_seeded = false;
  if (bias.present()) {
    c.bias = parse_bias(bias);
    if (bias.text("seed")) {
      bias.integer("seed", c.bias->seed);
      bias_seeded = true;
    }
  }

  const auto det = section(root, "detection");
  det.real("epsilon", c.detection.epsilon);
  det.real("learning_rate", c.detection.training.learning_rate);
  det.integer("epochs", c.detection.training.epochs);
  det.integer("min_table_size", c.detection.min_table_size);
  det.boolean("size_weighted", c.detection.size_weighted);

  const auto pr = section(root, "predictor");
  pr.real("learning_rate", c.predictor.learning_rate);
  pr.integer("epochs", c.predictor.epochs);
  pr.integer("tokens", c.predictor.tokens);
  pr.integer("d_model", c.predictor.d_model);
  pr.integer("n_heads", c.predictor.n_heads);
  pr.integer("conv_kernel", c.predictor.conv_kernel);
  pr.integer("conv1_channels", c.predictor.conv1_channels);
  pr.integer("conv2_channels", c.predictor.conv2_channels);
  pr.integer("pool_width", c.predictor.pool_width);
  pr.integer("lstm_hidden", c.predictor.lstm_hidden);
  pr.real("signal_threshold", c.predictor.signal_threshold);
  pr.real("init_gain", c.predictor.init_gain);

  c.predictor.seed = c.seed;
  if (c.bias && !bias_seeded) c.bias->seed = c.seed;
  if (c.clients < 1) throw Error(ErrorKind::kInvalidArgument, "config run.clients must be >= 1");
  if (c.predictor.epochs < 0 || c.detection.training.epochs < 0) {
    throw Error(ErrorKind::kInvalidArgument, "config epochs must be >= 0");
  }
  if (!(c.detection.epsilon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "config detection.epsilon must be > 0");
  return c;
}

PipelineConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kMissingFile, "config file '" + path + "' not found");
  }
  return parse_config(csv::read_file(path));
}

void apply(PipelineConfig& cfg, const Overrides& o) {
  if (o.seed) {
    const bool bias_follows = cfg.bias && cfg.bias->seed == cfg.seed;
    cfg.seed = *o.seed;
    cfg.predictor.seed = *o.seed;
    if (bias_follows) cfg.bias->seed = *o.seed;
  }
  if (o.epsilon) {
    if (!(*o.epsilon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "--epsilon must be > 0");
    cfg.detection.epsilon = *o.epsilon;
  }
  if (o.learning_rate) cfg.predictor.learning_rate = *o.learning_rate;
  if (o.epochs) {
    if (*o.epochs < 0) throw Error(ErrorKind::kInvalidArgument, "--epochs must be >= 0");
    cfg.predictor.epochs = *o.epochs;
  }
  if (o.output) cfg.output = *o.output;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json quarters = nlohmann::json::array();
  for (const auto& q : cfg.quarters) quarters.push_back(q.to_string());
  nlohmann::json j{
      {"seed", cfg.seed},
      {"source", cfg.source},
      {"input", cfg.input},
      {"schema", cfg.schema},
      {"quarters", quarters},
      {"clients", cfg.clients},
      {"clean", cfg.clean},
      {"model", cfg.model},
      {"synth",
       {{"size", cfg.synth.size},
        {"n_adr", cfg.synth.n_adr},
        {"mean_spacing", cfg.synth.mean_spacing},
        {"severity_intercept", cfg.synth.severity_intercept},
        {"severity_weight", cfg.synth.severity_weight},
        {"severity_category_weight", cfg.synth.severity_category_weight},
        {"informative", cfg.synth.informative},
        {"n_drugs", cfg.synth.n_drugs},
        {"duplicate_rate", cfg.synth.duplicate_rate},
        {"outlier_rate", cfg.synth.outlier_rate},
        {"adr_weights", cfg.synth.adr_weights}}},
      {"detection",
       {{"epsilon", cfg.detection.epsilon},
        {"learning_rate", cfg.detection.training.learning_rate},
        {"epochs", cfg.detection.training.epochs},
        {"min_table_size", cfg.detection.min_table_size},
        {"size_weighted", cfg.detection.size_weighted}}},
      {"predictor", predictor::config_to_json(cfg.predictor)},
  };
  if (cfg.bias) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : cfg.bias->tables) tables.push_back({t.client, t.adr.value});
    nlohmann::json shifts = nlohmann::json::array();
    for (const auto& s : cfg.bias->shifts) shifts.push_back({s.column, s.delta});
    j["bias"] = {{"mode", std::string(to_string(cfg.bias->mode))},
                 {"tables", tables},
                 {"table_fraction", cfg.bias->table_fraction},
                 {"intensity", cfg.bias->intensity},
                 {"shifts", shifts},
                 {"seed", cfg.bias->seed}};
  } else {
    j["bias"] = nullptr;
  }
  return j;
}

}  // namespace fedsig::cli
