#include <vector>

#include "macf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return macf::cli_main(args);
}
