#include <iostream>

#include "qroute/cli.hpp"

int main(int argc, char** argv) { return qroute::cli::run(argc, argv, std::cout, std::cerr); }
