#include <string>
#include <vector>

#include "topohead/cli.hpp"

int main(int argc, char** argv) {
  return topohead::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
