#include "sosg/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sosg::run_cli(argc, argv, std::cout, std::cerr); }
