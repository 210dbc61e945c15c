#include <string>
#include <vector>

#include "hhr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hhr::run_cli(args);
}
