#include <iostream>

#include "collcal/tools/cli.h"

int main(int argc, char** argv) { return collcal::tools::run_cli(argc, argv, std::cout, std::cerr); }
