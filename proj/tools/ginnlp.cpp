#include <iostream>

#include "ginnlp/cli.hpp"

int main(int argc, char** argv)
{
    return ginnlp::run_cli(argc, argv, std::cout, std::cerr);
}
