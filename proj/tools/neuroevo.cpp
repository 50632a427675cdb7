#include <iostream>

#include "neuroevo/cli.hpp"

int main(int argc, char** argv) {
    return neuroevo::cli::run(argc, argv, std::cout, std::cerr);
}
