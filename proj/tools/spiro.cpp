#include "spiro/cli.hpp"

int main(int argc, char** argv) { return spiro::cli::run(argc, argv); }
