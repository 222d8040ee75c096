#include <string>
#include <vector>

#include "relicert/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return relicert::run_cli(args);
}
