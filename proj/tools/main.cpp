#include <iostream>

#include "rmstcea/cli.hpp"

int main(int argc, char** argv) { return rmstcea::run_cli(argc, argv, std::cout, std::cerr); }
