#include "fedsig/cli/commands.hpp"

int main(int argc, char** argv) { return fedsig::cli::main_entry(argc, argv); }
