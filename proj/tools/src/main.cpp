#include <iostream>

#include "volgram/cli.hpp"

int main(int argc, char** argv) { return volgram::cli::run(argc, argv, std::cout, std::cerr); }
