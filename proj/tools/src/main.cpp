#include <iostream>

#include "fpbench/commands.hpp"

int main(int argc, char** argv) { return fpbench::run_cli(argc, argv, std::cout, std::cerr); }
