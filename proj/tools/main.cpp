#include <iostream>
#include <string>
#include <vector>

#include "icc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return icc::run_cli(args, std::cout, std::cerr);
}
