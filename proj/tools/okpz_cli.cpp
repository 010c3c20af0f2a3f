#include <string>
#include <vector>

#include "okpz/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return okpz::dispatch(args);
}
