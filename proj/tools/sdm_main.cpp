// sdm - command-line entry point

#include <iostream>

#include "sdm/cli.hpp"

int main(int argc, char** argv)
{
    try {
        return sdm::cli::run_cli(argc, argv, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 70;
    }
}
