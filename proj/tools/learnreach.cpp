#include <iostream>

#include "learnreach/cli.hpp"

int main(int argc, char** argv) { return learnreach::cli_main(argc, argv, std::cout, std::cerr); }
