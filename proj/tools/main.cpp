#include <iostream>

#include "vmm/cli.hpp"

int main(int argc, char** argv) { return vmm::cli_main(argc, argv, std::cout, std::cerr); }
