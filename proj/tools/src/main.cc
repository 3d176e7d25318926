#include <iostream>
#include <string>
#include <vector>

#include "relpose_tools/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return relpose::run_cli(args, std::cout, std::cerr);
}
