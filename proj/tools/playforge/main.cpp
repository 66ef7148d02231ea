#include <iostream>

#include "playforge/cli/cli.hpp"

int main(int argc, char** argv) {
    return playforge::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
