#include "ftle_cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return ftle::cli::run(argc, argv, std::cout, std::cerr); }
