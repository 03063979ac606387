#include "npts/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return npts::run_cli(argc, argv, std::cout, std::cerr);
}
