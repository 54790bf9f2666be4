#include <iostream>
#include <string>
#include <vector>

#include "epsketch/cli.hpp"

int main(int argc, char** argv) {
  return epsketch::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
