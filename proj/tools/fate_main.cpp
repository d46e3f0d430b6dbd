#include <iostream>

#include "fate/cli.hpp"

int main(int argc, char** argv) { return fate::run_cli(argc, argv, std::cout, std::cerr); }
