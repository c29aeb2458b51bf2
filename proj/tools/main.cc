#include <iostream>
#include <string>
#include <vector>

#include "xcal/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return xcal::run_cli(args, std::cout, std::cerr);
}
