#include "skinelev/cli/commands.hpp"

int main(int argc, char** argv) { return skinelev::cli::run_cli(argc, argv); }
