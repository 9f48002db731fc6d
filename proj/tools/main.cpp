#include <iostream>

#include "mstat/cli.hpp"

int main(int argc, char** argv) { return mstat::cli::run(argc, argv, std::cout, std::cerr); }
