#include "cli.hpp"

int main(int argc, char** argv) {
  return dirac3::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
