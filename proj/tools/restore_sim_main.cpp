#include <iostream>
#include <string>
#include <vector>

#include "restore_sim/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return restore_sim::run_cli(args, std::cout, std::cerr);
}
