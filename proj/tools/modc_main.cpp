#include <string>
#include <vector>

#include "modc/cli.hpp"

int main(int argc, char** argv) {
  return modc::cli::run(std::vector<std::string>(argv, argv + argc));
}
