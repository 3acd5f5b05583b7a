#include "bciqt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bciqt::cli::run(argc, argv, std::cout, std::cerr); }
