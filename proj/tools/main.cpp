#include "clustrand/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return clustrand::run_cli(argc, argv, std::cout, std::cerr); }
