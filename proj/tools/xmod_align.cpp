#include <iostream>

#include "xmod/cli.hpp"

int main(int argc, char** argv) { return xmod::run_cli(argc, argv, std::cout, std::cerr); }
