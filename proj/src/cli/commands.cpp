#include "fedsig/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>

#include <CLI11.hpp>

#include "fedsig/bias.hpp"
#include "fedsig/cli/manifest.hpp"
#include "fedsig/csv.hpp"
#include "fedsig/dataset_io.hpp"
#include "fedsig/disproportionality.hpp"
#include "fedsig/error.hpp"
#include "fedsig/faers.hpp"
#include "fedsig/fed_detect.hpp"
#include "fedsig/metrics.hpp"
#include "fedsig/pfed_split.hpp"
#include "fedsig/predictor/params_io.hpp"
#include "fedsig/predictor/train.hpp"
#include "fedsig/synth.hpp"

namespace fedsig::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAllTablesFlagged:
      return kExitAllTablesFlagged;
    case ErrorKind::kNonFiniteLoss:
      return kExitNonFiniteLoss;
    default:
      return kExitInput;
  }
}

void require_input(const PipelineConfig& cfg, const char* what) {
  if (cfg.input.empty()) throw Error(ErrorKind::kInvalidArgument, std::string("run.input must name ") + what);
  if (!fs::exists(cfg.input)) throw Error(ErrorKind::kMissingFile, "input '" + cfg.input + "' not found");
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

FeatureSchema schema_for(const PipelineConfig& cfg) {
  if (!cfg.schema.empty()) return io::read_schema_file(cfg.schema);
  return cfg.source == "faers" ? faers::default_schema() : synth::default_schema();
}

// Quarters named by DEMOyyQq files in `dir`, used when the config lists none.
std::vector<Quarter> discover_quarters(const std::string& dir) {
  static const std::regex pattern(R"(DEMO(\d\d)Q([1-4])\.(txt|TXT))");
  std::set<Quarter> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.insert({2000 + std::stoi(m[1]), std::stoi(m[2])});
  }
  if (found.empty()) throw Error(ErrorKind::kMissingFile, "no DEMO quarter files in '" + dir + "'");
  return {found.begin(), found.end()};
}

// Concatenates per-quarter datasets over the union of their ADR names.
Dataset merge(std::vector<Dataset> parts) {
  std::set<std::string> names;
  for (const auto& p : parts) names.insert(p.adr_universe.begin(), p.adr_universe.end());
  Dataset out;
  out.schema = parts.front().schema;
  out.adr_universe.assign(names.begin(), names.end());
  for (auto& p : parts) {
    for (auto& r : p.records) {
      r.adr_label = *out.find_adr(p.adr_universe[r.adr_label.value]);
      r.record_id = out.records.size();
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

Dataset load_original(const PipelineConfig& cfg, Manifest& manifest) {
  if (cfg.source == "synth") {
    Rng rng = Rng(cfg.seed).fork("synth");
    return synth::generate(cfg.synth, schema_for(cfg), rng).first;
  }
  if (cfg.source == "faers") {
    require_input(cfg, "a FAERS quarter directory");
    manifest.add_input(cfg.input);
    const auto quarters = cfg.quarters.empty() ? discover_quarters(cfg.input) : cfg.quarters;
    const auto schema = schema_for(cfg);
    std::vector<Dataset> parts;
    for (const auto& q : quarters) parts.push_back(faers::assemble_dataset(faers::parse_quarter(cfg.input, q), schema));
    return merge(std::move(parts));
  }
  require_input(cfg, "a dataset CSV");
  manifest.add_input(cfg.input);
  manifest.add_input(io::sidecar_path(cfg.input));
  return io::read_dataset(cfg.input);
}

void write_dataset(Manifest& m, const Dataset& d, const std::string& stem) {
  m.write_output(stem + ".csv", io::dataset_csv(d));
  m.write_output(stem + ".json", dump(io::dataset_sidecar(d)));
}

struct SplitStage {
  Dataset preprocessed;
  SplitDataset split;
};

SplitStage split_stage(const PipelineConfig& cfg, const Dataset& original, Manifest& m) {
  auto pre = preprocess(original);
  write_dataset(m, pre.dataset, "preprocessed");
  m.write_output("cleaning.json", dump(to_json(pre.report)));
  m.complete_stage("preprocess");

  Rng rng = Rng(cfg.seed).fork("split");
  SplitDataset split = split_uniform(pre.dataset, cfg.clients, rng);
  if (cfg.bias) {
    auto [biased, truth] = inject_bias(split, *cfg.bias);
    split = std::move(biased);
    m.write_output("bias_truth.json", dump(io::annotation_to_json(truth)));
  }
  io::write_split(split, (fs::path(m.output_dir()) / "split").string());
  m.add_output("split");
  m.complete_stage("split");
  return {std::move(pre.dataset), std::move(split)};
}

std::string distances_csv(const DetectionReport& report) {
  std::string out = "client,adr,size,distance,flagged,degenerate,exempt\n";
  for (const auto& [key, t] : report.tables) {
    const std::vector<std::string> row{std::to_string(key.client), std::to_string(key.adr.value),
                                       std::to_string(t.size),     csv::format_double(t.distance),
                                       t.flagged ? "1" : "0",      t.degenerate ? "1" : "0",
                                       t.exempt};
    out += csv::join_row(row) + "\n";
  }
  return out;
}

// Writes the report before assembling, so an AllTablesFlagged run still
// leaves its distances behind.
Dataset detect_stage(const PipelineConfig& cfg, const SplitDataset& split, Manifest& m) {
  const auto report = detect(split, cfg.detection);
  m.write_output("detection.json", dump(to_json(report)));
  m.write_output("distances.csv", distances_csv(report));
  m.write_output("ppgcm.csv", ppgcm_csv(report));
  Dataset clean = assemble_clean(split, report.flagged);
  write_dataset(m, clean, "clean");
  m.complete_stage("detect");
  return clean;
}

void signal_stage(const Dataset& original, const Dataset& clean, Manifest& m) {
  m.write_output("ror_prr.csv", comparison_csv(compare(original, clean), original.adr_universe));
  m.complete_stage("signal");
}

nlohmann::json evaluate(predictor::Network& net, const Dataset& d, double threshold,
                        std::vector<predictor::SignalPrediction>* keep = nullptr) {
  auto preds = predictor::predict_signals(net, d, threshold);
  std::vector<double> probs;
  std::size_t flagged = 0;
  for (const auto& p : preds) {
    probs.insert(probs.end(), p.class_probs.begin(), p.class_probs.end());
    flagged += p.flagged ? 1 : 0;
  }
  const auto labels = predictor::label_vector(d);
  nlohmann::json j{{"records", d.size()}, {"signals_flagged", flagged}};
  if (!d.records.empty()) {
    j["metrics"] = metrics::to_json(metrics::multiclass(probs, d.adr_universe.size(), labels));
  }
  if (keep) *keep = std::move(preds);
  return j;
}

predictor::TrainedModel train_stage(const PipelineConfig& cfg, const Dataset& clean, Manifest& m) {
  const auto pc = predictor::configured_for(clean, cfg.predictor);
  predictor::TrainedModel model{predictor::Network(pc), {}};
  Rng init = Rng(pc.seed).fork("init");
  model.net.init(init);
  try {
    predictor::fit(model.net, predictor::feature_matrix(clean), predictor::label_vector(clean), pc, model.trace);
  } catch (const Error&) {
    m.write_output("trace.csv", predictor::trace_csv(model.trace));
    throw;
  }
  m.write_output("trace.csv", predictor::trace_csv(model.trace));
  m.write_output("model.bin", predictor::serialize_params(model.net));
  m.complete_stage("train");
  return model;
}

Dataset read_dataset_or_split(const std::string& path, Manifest& m) {
  m.add_input(path);
  if (fs::is_directory(path)) return io::read_split(path).flatten();
  m.add_input(io::sidecar_path(path));
  return io::read_dataset(path);
}

// ---- commands --------------------------------------------------------------

void cmd_ingest(const PipelineConfig& cfg, Manifest& m) {
  if (cfg.source != "faers") throw Error(ErrorKind::kInvalidArgument, "ingest needs run.source = faers");
  const auto original = load_original(cfg, m);
  write_dataset(m, original, "dataset");
  m.complete_stage("ingest");
  const auto pre = preprocess(original);
  write_dataset(m, pre.dataset, "preprocessed");
  m.write_output("summary.json", dump({{"records", original.size()},
                                       {"adr_count", original.adr_universe.size()},
                                       {"cleaning", to_json(pre.report)}}));
  m.complete_stage("preprocess");
}

void cmd_synth(const PipelineConfig& cfg, Manifest& m) {
  const auto d = load_original(cfg, m);
  write_dataset(m, d, "dataset");
  m.write_output("summary.json", dump({{"records", d.size()}, {"adr_count", d.adr_universe.size()}}));
  m.complete_stage("synth");
}

void cmd_split(const PipelineConfig& cfg, Manifest& m) {
  const auto original = load_original(cfg, m);
  m.complete_stage("load");
  split_stage(cfg, original, m);
}

void cmd_detect(const PipelineConfig& cfg, Manifest& m) {
  require_input(cfg, "a split directory");
  m.add_input(cfg.input);
  detect_stage(cfg, io::read_split(cfg.input), m);
}

void cmd_signal(const PipelineConfig& cfg, Manifest& m) {
  require_input(cfg, "the original dataset (CSV or split directory)");
  if (cfg.clean.empty() || !fs::exists(cfg.clean)) {
    throw Error(ErrorKind::kMissingFile, "run.clean must name an existing clean dataset CSV");
  }
  const auto original = read_dataset_or_split(cfg.input, m);
  const auto clean = read_dataset_or_split(cfg.clean, m);
  signal_stage(original, clean, m);
}

void cmd_train(const PipelineConfig& cfg, Manifest& m) {
  require_input(cfg, "a clean dataset CSV");
  const auto clean = read_dataset_or_split(cfg.input, m);
  auto model = train_stage(cfg, clean, m);
  m.write_output("metrics.json", dump({{"train", evaluate(model.net, clean, cfg.predictor.signal_threshold)}}));
}

void cmd_predict(const PipelineConfig& cfg, Manifest& m) {
  require_input(cfg, "a dataset CSV");
  if (cfg.model.empty() || !fs::exists(cfg.model)) {
    throw Error(ErrorKind::kMissingFile, "run.model must name an existing model file");
  }
  m.add_input(cfg.model);
  auto net = predictor::load_params(cfg.model);
  auto d = read_dataset_or_split(cfg.input, m);
  if (!d.normalized) d = preprocess(d).dataset;
  std::vector<predictor::SignalPrediction> preds;
  const auto summary = evaluate(net, d, cfg.predictor.signal_threshold, &preds);
  m.write_output("predictions.csv", predictor::predictions_csv(preds));
  m.write_output("metrics.json", dump(summary));
  m.complete_stage("predict");
}

void cmd_pipeline(const PipelineConfig& cfg, Manifest& m) {
  const auto original = load_original(cfg, m);
  write_dataset(m, original, "original");
  m.complete_stage("load");
  const auto stage = split_stage(cfg, original, m);
  const auto clean = detect_stage(cfg, stage.split, m);
  const auto split_records = stage.split.flatten();
  signal_stage(split_records, clean, m);
  auto model = train_stage(cfg, clean, m);
  std::vector<predictor::SignalPrediction> preds;
  nlohmann::json metrics{{"clean", evaluate(model.net, clean, cfg.predictor.signal_threshold)},
                         {"split", evaluate(model.net, split_records, cfg.predictor.signal_threshold, &preds)}};
  m.write_output("predictions.csv", predictor::predictions_csv(preds));
  m.write_output("metrics.json", dump(metrics));
  m.complete_stage("evaluate");
}

void cmd_report(const PipelineConfig& cfg, Manifest& m) {
  require_input(cfg, "a run output directory");
  if (fs::exists(cfg.output) && fs::equivalent(cfg.input, cfg.output)) {
    throw Error(ErrorKind::kInvalidArgument, "report needs --out different from the run directory");
  }
  const auto run = fs::path(cfg.input);
  const auto mismatched = verify_manifest(run.string());
  const auto manifest = nlohmann::json::parse(csv::read_file((run / "manifest.json").string()));
  m.add_input((run / "manifest.json").string());
  nlohmann::json report{{"run", manifest.value("command", "")},
                        {"exit_code", manifest.value("exit_code", 0)},
                        {"stages", manifest.value("stages", nlohmann::json::array())},
                        {"outputs_verified", mismatched.empty()},
                        {"mismatched_outputs", mismatched}};
  auto read_json = [&](const char* name) -> std::optional<nlohmann::json> {
    const auto p = run / name;
    if (!fs::exists(p)) return std::nullopt;
    return nlohmann::json::parse(csv::read_file(p.string()));
  };
  if (auto det = read_json("detection.json")) {
    report["detection"] = {{"epsilon", (*det)["epsilon"]},
                           {"tables", (*det)["tables"].size()},
                           {"flagged", (*det)["flagged"]}};
  }
  if (auto truth = read_json("bias_truth.json")) report["bias_truth"] = *truth;
  if (auto cleaning = read_json("cleaning.json")) report["cleaning"] = *cleaning;
  if (auto metrics = read_json("metrics.json")) report["metrics"] = *metrics;
  m.write_output("report.json", dump(report));
  m.complete_stage("report");
}

using Handler = void (*)(const PipelineConfig&, Manifest&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"ingest", cmd_ingest}, {"synth", cmd_synth},       {"split", cmd_split},
      {"detect", cmd_detect}, {"signal", cmd_signal},     {"train", cmd_train},
      {"predict", cmd_predict}, {"pipeline", cmd_pipeline}, {"report", cmd_report},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"ingest", "synth", "split",    "detect", "signal",
                                              "train",  "predict", "pipeline", "report"};
  return names;
}

int run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& err) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) {
    err << "error: unknown command '" << command << "'\n";
    return kExitInput;
  }
  Manifest manifest(command, cfg.output);
  manifest.set_config(to_json(cfg));
  int code = kExitOk;
  try {
    fs::create_directories(cfg.output);
    it->second(cfg, manifest);
  } catch (const Error& e) {
    code = exit_code_for(e.kind());
    manifest.fail(code, e.what());
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = kExitInternal;
    manifest.fail(code, e.what());
    err << "error: internal: " << e.what() << "\n";
  }
  try {
    manifest.save();
  } catch (const std::exception& e) {
    err << "error: could not write manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitInput;
  }
  return code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"PFed-Signal: federated bias detection and ADR signal prediction"};
  app.require_subcommand(1, 1);
  std::string config_path;
  Overrides o;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double lr = 0.0;
  int epochs = 0;
  std::string out;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--epsilon", epsilon, "detection distance threshold");
    sub->add_option("--lr", lr, "predictor learning rate");
    sub->add_option("--epochs", epochs, "predictor epochs");
    sub->add_option("--out", out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--epsilon")) o.epsilon = epsilon;
  if (sub->count("--lr")) o.learning_rate = lr;
  if (sub->count("--epochs")) o.epochs = epochs;
  if (sub->count("--out")) o.output = out;

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    apply(cfg, o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return run_command(sub->get_name(), cfg, std::cerr);
}

}  // namespace fedsig::cli
