#include <iostream>

#include "ldcvae_cli/cli.hpp"

int main(int argc, char** argv) { return ldc::cli::run(argc, argv, std::cout, std::cerr); }
