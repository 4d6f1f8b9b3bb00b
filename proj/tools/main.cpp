#include <iostream>

#include "mrsim/cli.hpp"

int main(int argc, char** argv) { return mrsim::cli::run(argc, argv, std::cout, std::cerr); }
