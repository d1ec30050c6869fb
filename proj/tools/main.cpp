#include <iostream>

#include "schemamatch/commands.hpp"

int main(int argc, char** argv) { return schemamatch::run_cli(argc, argv, std::cout, std::cerr); }
