#include <iostream>

#include "haar/cli.hpp"

int main(int argc, char** argv) { return haar::cli::run(argc, argv, std::cout, std::cerr); }
