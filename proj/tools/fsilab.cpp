#include <iostream>

#include "fsilab/commands.hpp"

int main(int argc, char** argv) { return fsilab::run_cli(argc, argv, std::cout, std::cerr); }
