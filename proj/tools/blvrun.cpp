#include <string>
#include <vector>

#include "blvrun/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return blvrun::cli::dispatch(args);
}
