#include <iostream>
#include <string>
#include <vector>

#include "emoedit/cli.hpp"

int main(int argc, char** argv) {
  return emoedit::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
