#include "fraccap/config.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return fraccap::cli_main(argc, argv, std::cout, std::cerr);
}
