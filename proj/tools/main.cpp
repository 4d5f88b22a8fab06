#include <iostream>
#include <string>
#include <vector>

#include "shufflenet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shufflenet::run_cli(args, std::cout, std::cerr);
}
