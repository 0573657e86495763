#include <iostream>

#include "beeflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return beeflow::cli::run(args, std::cout, std::cerr);
}
