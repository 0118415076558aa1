#include <iostream>

#include "secrecy/cli.hpp"

int main(int argc, char** argv) { return secrecy::cli::run(argc, argv, std::cout, std::cerr); }
