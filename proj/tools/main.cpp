#include <string>
#include <vector>

#include "poip/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return poip::run_cli(args);
}
