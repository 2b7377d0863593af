#include <iostream>

#include "ffsense/cli/cli.hpp"

int main(int argc, char** argv) { return ffsense::cli::run(argc, argv, {std::cout, std::cerr}); }
