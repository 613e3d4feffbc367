#include "statcal/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return statcal::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
