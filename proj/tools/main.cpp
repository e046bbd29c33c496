#include "cli.hpp"

int main(int argc, char** argv) { return scanet::cli::cli_main(argc, argv); }
