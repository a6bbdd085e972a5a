#include <iostream>

#include "lqgame/commands.hpp"

int main(int argc, char** argv) { return lqgame::cli::run(argc, argv, std::cout, std::cerr); }
