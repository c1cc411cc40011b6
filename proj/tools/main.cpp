#include <iostream>
#include <string>
#include <vector>

#include "lahm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lahm::cli::run(std::move(args), std::cout, std::cerr);
}
