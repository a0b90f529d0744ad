#include <iostream>
#include <string>
#include <vector>

#include "fedtier/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fedtier::run_cli(args, std::cout, std::cerr);
}
