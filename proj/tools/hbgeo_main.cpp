#include <iostream>

#include "hbgeo/cli.hpp"

int main(int argc, char** argv) { return hbgeo::cli::run(argc, argv, std::cout, std::cerr); }
