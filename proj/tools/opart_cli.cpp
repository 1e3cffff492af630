#include <iostream>

#include "opart/cli.hpp"

int main(int argc, char** argv) { return opart::run_cli(argc, argv, std::cout, std::cerr); }
