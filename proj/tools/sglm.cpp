#include <iostream>

#include "sglm/cli.hpp"

int main(int argc, char** argv) { return sglm::cli::run(argc, argv, std::cout, std::cerr); }
