#include <iostream>

#include "quench/cli.hpp"

int main(int argc, char** argv) { return quench::cli::main_entry(argc, argv, std::cout, std::cerr); }
