#include "rcurv/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return rcurv::cli_main(argc, argv, std::cout, std::cerr);
}
