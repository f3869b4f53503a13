#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fedsig::cli {

std::string sha256_hex(std::string_view bytes);
// Hash of a file's bytes; throws Error(Io) when unreadable.
std::string sha256_file(const std::string& path);

// Written as <output>/manifest.json by every command, on success and on
// failure. Output paths are relative to the output directory and hashed when
// the manifest is written, so a rerun with equal inputs and config yields an
// identical manifest.
class Manifest {
 public:
  Manifest(std::string command, std::string output_dir);

  void set_config(const nlohmann::json& effective_config);
  void add_input(const std::string& path);
  // Stages are recorded in the order they finish.
  void complete_stage(const std::string& name);
  // Writes `contents` to <output>/<relative> and records it.
  void write_output(const std::string& relative, std::string_view contents);
  // Records a file or directory tree that was written by other means.
  void add_output(const std::string& relative);
  void fail(int exit_code, const std::string& message);

  const std::string& output_dir() const { return dir_; }
  nlohmann::json to_json() const;
  void save() const;

 private:
  std::string command_;
  std::string dir_;
  std::string config_hash_;
  nlohmann::json config_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> stages_;
  std::vector<std::string> outputs_;
  int exit_code_ = 0;
  std::string error_;
};

// Recomputes every output hash listed in a manifest found in `output_dir`.
// Returns the relative paths whose hash no longer matches (or that vanished).
std::vector<std::string> verify_manifest(const std::string& output_dir);

}  // namespace fedsig::cli
