#include <iostream>

#include "appeval/commands.hpp"

int main(int argc, char** argv) { return appeval::run_cli(argc, argv, std::cout, std::cerr); }
