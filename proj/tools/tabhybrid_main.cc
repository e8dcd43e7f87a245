#include <iostream>
#include <string>
#include <vector>

#include "tabhybrid/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tabhybrid::cli::Main(args, std::cout, std::cerr);
}
