#include <iostream>

#include "metaselect/commands.hpp"

int main(int argc, char** argv) {
  return metaselect::run_cli(argc, argv, std::cout, std::cerr);
}
