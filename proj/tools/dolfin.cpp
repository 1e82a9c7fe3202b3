#include <iostream>
#include <string>
#include <vector>

#include "dolfin/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return dolfin::run_cli(args, std::cout, std::cerr);
}
