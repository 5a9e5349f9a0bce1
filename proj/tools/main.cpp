#include <iostream>
#include <string>
#include <vector>

#include "clir/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return clir::run_cli(args, std::cout, std::cerr);
}
