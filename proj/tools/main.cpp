#include <iostream>

#include "pdiff/cli.hpp"

int main(int argc, char** argv) { return pdiff::run_cli(argc, argv, std::cout, std::cerr); }
