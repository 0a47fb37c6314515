#include <reusecfg/cli.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    return reusecfg::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
