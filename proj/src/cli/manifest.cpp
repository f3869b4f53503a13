#include "fedsig/cli/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include <openssl/evp.h>

#include "fedsig/csv.hpp"
#include "fedsig/error.hpp"

namespace fedsig::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(csv::read_file(path)); }

namespace {

// Files under `root` (a file or a directory), as sorted relative paths.
std::vector<std::string> files_under(const fs::path& base, const std::string& relative) {
  const fs::path root = base / relative;
  std::vector<std::string> out;
  if (fs::is_regular_file(root)) {
    out.push_back(relative);
  } else if (fs::is_directory(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) out.push_back(fs::relative(entry.path(), base).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Manifest::Manifest(std::string command, std::string output_dir)
    : command_(std::move(command)), dir_(std::move(output_dir)) {}

void Manifest::set_config(const nlohmann::json& effective_config) {
  config_ = effective_config;
  config_hash_ = sha256_hex(effective_config.dump());
}

void Manifest::add_input(const std::string& path) {
  if (fs::is_regular_file(path)) {
    inputs_[path] = sha256_file(path);
  } else if (fs::is_directory(path)) {
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) inputs_[entry.path().generic_string()] = sha256_file(entry.path().string());
    }
  }
}

void Manifest::complete_stage(const std::string& name) { stages_.push_back(name); }

void Manifest::write_output(const std::string& relative, std::string_view contents) {
  const fs::path p = fs::path(dir_) / relative;
  fs::create_directories(p.parent_path());
  csv::write_file(p.string(), contents);
  add_output(relative);
}

void Manifest::add_output(const std::string& relative) {
  for (const auto& f : files_under(dir_, relative)) {
    if (std::find(outputs_.begin(), outputs_.end(), f) == outputs_.end()) outputs_.push_back(f);
  }
}

void Manifest::fail(int exit_code, const std::string& message) {
  exit_code_ = exit_code;
  error_ = message;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json outputs = nlohmann::json::object();
  auto sorted = outputs_;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& rel : sorted) {
    const auto path = (fs::path(dir_) / rel).string();
    if (fs::exists(path)) outputs[rel] = sha256_file(path);
  }
  nlohmann::json j{{"command", command_},
                   {"config_sha256", config_hash_},
                   {"config", config_},
                   {"inputs", inputs_},
                   {"stages", stages_},
                   {"outputs", outputs},
                   {"exit_code", exit_code_}};
  if (!error_.empty()) j["error"] = error_;
  return j;
}

void Manifest::save() const {
  fs::create_directories(dir_);
  csv::write_file((fs::path(dir_) / "manifest.json").string(), to_json().dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::string& output_dir) {
  const auto path = (fs::path(output_dir) / "manifest.json").string();
  if (!fs::exists(path)) throw Error(ErrorKind::kMissingFile, "no manifest.json in '" + output_dir + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, "manifest.json: " + std::string(e.what()));
  }
  std::vector<std::string> bad;
  const auto outputs = j.value("outputs", nlohmann::json::object());
  for (const auto& [rel, hash] : outputs.items()) {
    const auto file = (fs::path(output_dir) / rel).string();
    if (!fs::exists(file) || sha256_file(file) != hash.get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

}  // namespace fedsig::cli
