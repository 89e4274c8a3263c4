#include <iostream>
#include <string>
#include <vector>

#include "ccs/cli/cli.hpp"

int main(int argc, char** argv) {
  return ccs::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
