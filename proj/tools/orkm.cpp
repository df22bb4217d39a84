#include <iostream>

#include "orkm/cli.hpp"

int main(int argc, char** argv) { return orkm::cli::run(argc, argv, std::cout, std::cerr); }
