#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fedsig/cli/config.hpp"

namespace fedsig::cli {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitAllTablesFlagged = 3;
constexpr int kExitNonFiniteLoss = 4;

const std::vector<std::string>& command_names();

// Runs one subcommand against an already-resolved config. Every command
// writes <output>/manifest.json, including on failure, and reports failures
// on `err` as "error: <Kind>: <message>".
int run_command(const std::string& command, const PipelineConfig& cfg, std::ostream& err);

// Full command line: `fedsig <command> [--config F] [--seed N] [--epsilon E]
// [--lr L] [--epochs N] [--out DIR]`.
int main_entry(int argc, char** argv);

}  // namespace fedsig::cli
