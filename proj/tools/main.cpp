#include <iostream>

#include "stfl/cli/cli.hpp"

int main(int argc, char** argv) { return stfl::run_cli(argc, argv, std::cout, std::cerr); }
