#include <iostream>

#include "pedaco/cli.hpp"

int main(int argc, char** argv) {
    return pedaco::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
