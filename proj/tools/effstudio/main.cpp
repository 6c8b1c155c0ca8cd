#include <iostream>

#include "effdyn/studio.hpp"

int main(int argc, char **argv) {
  return effdyn::studio::run(argc, argv, std::cout, std::cerr);
}
