#include <iostream>

#include "carscore/cli.hpp"

int main(int argc, char** argv) { return carscore::cli::run(argc, argv, std::cout, std::cerr); }
