#include <iostream>
#include <string>
#include <vector>

#include "hawkes/cli.hpp"

int main(int argc, char** argv) {
  return hawkes::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
