#include <iostream>
#include <string>
#include <vector>

#include "d2l/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return d2l::run_cli(args, std::cout, std::cerr);
}
