#include <iostream>
#include <string>
#include <vector>

#include "doctrina/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return doctrina::run_cli(args, std::cout, std::cerr);
}
