#include <iostream>

#include "partner/cli.hpp"

int main(int argc, char** argv) { return partner::run_cli(argc, argv, std::cout, std::cerr); }
