#include <iostream>
#include <string>
#include <vector>

#include "lramp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lramp::cli::run_cli(args, std::cout, std::cerr);
}
