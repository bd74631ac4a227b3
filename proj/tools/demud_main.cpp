#include <iostream>

#include "demud/cli.hpp"

int main(int argc, char** argv) { return demud::run_cli(argc, argv, std::cout, std::cerr); }
