#include <iostream>

#include "frwcap/cli.hpp"

int main(int argc, char** argv) {
  return frwcap::run_cli(argc, argv, std::cout, std::cerr);
}
