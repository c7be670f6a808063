#include <iostream>

#include "fe/cli.hpp"

int main(int argc, char** argv) { return fe::cli::run(argc, argv, std::cout, std::cerr); }
