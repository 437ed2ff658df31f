#include "stv/cli.hpp"

int main(int argc, char** argv) { return stv::cli::run_cli(argc, argv); }
