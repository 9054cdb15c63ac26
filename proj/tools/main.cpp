#include <iostream>

#include "thouless/cli.hpp"

int main(int argc, char** argv) { return thouless::cli::run(argc, argv, std::cout, std::cerr); }
