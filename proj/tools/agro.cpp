#include <iostream>

#include "agro/cli.hpp"

int main(int argc, char** argv) { return agro::cli::run(argc, argv, std::cout, std::cerr); }
