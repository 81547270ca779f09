#include <iostream>
#include <string>
#include <vector>

#include "net3/cli.hpp"

int main(int argc, char** argv) {
  return net3::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
