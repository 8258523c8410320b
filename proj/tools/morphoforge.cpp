// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/cli/cli.hpp>

#include <iostream>

auto main(int argc, char** argv) -> int
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return morphoforge::cli::run(args, std::cout, std::cerr);
}
