#pragma once

#include <string>

#include <json.hpp>

#include "fedsig/predictor/network.hpp"

namespace fedsig::predictor {

nlohmann::json config_to_json(const PredictorConfig& cfg);
// Missing keys keep the defaults of `base`.
PredictorConfig config_from_json(const nlohmann::json& j, PredictorConfig base = {});

// Flat little-endian binary:
//   "FSPARAM1"                       8-byte magic
//   u32 n, config JSON (n bytes)     architecture needed to rebuild the net
//   u32 tensor count
//   per tensor: u32 name length, name, u32 rows, u32 cols
//   all tensor values, row-major f64, in table order
std::string serialize_params(Network& net);
Network deserialize_params(const std::string& bytes);

void save_params(Network& net, const std::string& path);
Network load_params(const std::string& path);

}  // namespace fedsig::predictor
