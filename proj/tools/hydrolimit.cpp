#include <iostream>

#include "hydrolimit/cli.hpp"

int main(int argc, char** argv) { return hydrolimit::run_cli(argc, argv, std::cout, std::cerr); }
