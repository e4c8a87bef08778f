#include <iostream>

#include "rbsgd/cli.hpp"

int main(int argc, char** argv) { return rbsgd::run_cli(argc, argv, std::cout, std::cerr); }
