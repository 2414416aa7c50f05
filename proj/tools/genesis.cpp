#include <iostream>

#include "genesis/cli.hpp"

int main(int argc, char** argv) { return genesis::run_cli(argc, argv, std::cout, std::cerr); }
