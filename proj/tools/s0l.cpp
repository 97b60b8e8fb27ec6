#include <iostream>

#include "s0l/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return s0l::cli::run(args, std::cout, std::cerr);
}
