#include <iostream>

#include "eyetheia/cli.hpp"

int main(int argc, char** argv) { return eyetheia::cli::run(argc, argv, std::cout, std::cerr); }
