#include <iostream>

#include "qoq/cli/commands.hpp"

int main(int argc, char** argv) { return qoq::cli::run(argc, argv, std::cout, std::cerr); }
