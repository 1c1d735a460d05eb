#include <iostream>

#include "ddstab/cli.hpp"

int main(int argc, char** argv) {
  return ddstab::cli::run(argc, argv, std::cout, std::cerr);
}
