#include <iostream>

#include "varfast/cli.hpp"

int main(int argc, char** argv) { return varfast::run_cli(argc, argv, std::cout, std::cerr); }
