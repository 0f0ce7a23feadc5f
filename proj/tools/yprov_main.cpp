#include "yprov/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return yprov::run_cli(argc, argv, std::cout, std::cerr);
}
