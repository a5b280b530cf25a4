#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return hybrid_spkr::cli::run(argc, argv, std::cout, std::cerr); }
