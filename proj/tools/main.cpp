#include "cli/commands.hpp"

int main(int argc, char** argv) { return bsqz::cli::run_cli(argc, argv); }
