#include <iostream>

#include "mtl/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mtl::cli::dispatch(args, std::cout, std::cerr);
}
