#include "appforge/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return appforge::cli::run(argc, argv, std::cout, std::cerr); }
