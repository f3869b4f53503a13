#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsig/bias.hpp"
#include "fedsig/domain.hpp"
#include "fedsig/fed_detect.hpp"
#include "fedsig/predictor/network.hpp"
#include "fedsig/synth.hpp"

namespace fedsig::cli {

// Everything a run depends on. Loaded from an INI file:
//
//   [run]        seed, source (synth|faers|dataset), input, output, schema,
//                quarters (comma list, e.g. 2012Q3,2012Q4), clients,
//                clean (signal), model (predict)
//   [synth]      size, n_adr, mean_spacing, severity_intercept,
//                severity_weight, severity_category_weight, informative,
//                n_drugs, duplicate_rate, outlier_rate, adr_weights
//   [bias]       mode, tables (client:adr pairs, adr as index),
//                table_fraction, intensity, shifts (column:delta pairs), seed
//   [detection]  epsilon, learning_rate, epochs, min_table_size, size_weighted
//   [predictor]  learning_rate, epochs, tokens, d_model, n_heads, conv_kernel,
//                conv1_channels, conv2_channels, pool_width, lstm_hidden,
//                signal_threshold, init_gain
//
// Unknown sections or keys are rejected so typos cannot silently fall back
// to defaults.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string source = "synth";
  std::string input;
  std::string output = "out";
  std::string schema;
  std::vector<Quarter> quarters;
  int clients = 3;
  std::string clean;
  std::string model;
  synth::SynthConfig synth;
  std::optional<BiasSpec> bias;
  DetectionConfig detection;
  predictor::PredictorConfig predictor;
};

// Throws Error(InvalidArgument) for malformed values or unknown keys and
// Error(MissingFile) when the file is absent.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& ini_text);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<std::string> output;
};

// Flags win over file values. --seed also reseeds the predictor and any bias
// spec that did not set its own seed.
void apply(PipelineConfig& cfg, const Overrides& o);

// The effective configuration, used for the manifest's config hash.
nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace fedsig::cli
