#include <iostream>

#include "pilock/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pilock::run_cli(args, std::cout, std::cerr);
}
