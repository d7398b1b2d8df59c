#include <iostream>

#include "mtpe/cli.hpp"

int main(int argc, char** argv) { return mtpe::cli::run(argc, argv, std::cout, std::cerr); }
