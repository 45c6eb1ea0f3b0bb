// Command-line entry point; subcommands are implemented in cli.hpp.

#include "ecrank/cli.hpp"

int main(int argc, char** argv) { return ecrank::cli::run(argc, argv); }
