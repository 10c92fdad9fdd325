#include "srifn/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return srifn::run_cli(argc, argv, std::cout, std::cerr); }
