#include <iostream>

#include "homeostat/cli/commands.hpp"

int main(int argc, char** argv) { return homeostat::cli::run_cli(argc, argv, std::cout, std::cerr); }
