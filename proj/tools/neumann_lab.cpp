#include "neumann/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return neumann::cli::run(argc, argv, std::cout, std::cerr); }
