#include <iostream>

#include "dprsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dprsim::run_cli(args, std::cout, std::cerr);
}
