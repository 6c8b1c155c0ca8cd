// Regenerates tests/fixtures/leg2dof_regression.json.
//   make_fixtures [output path]

#include <fstream>
#include <iostream>

#include "regression_values.hpp"

int main(int argc, char **argv) {
  const std::string path = argc > 1 ? argv[1] : "tests/fixtures/leg2dof_regression.json";
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write " << path << '\n';
    return 1;
  }
  out << effdyn::regression::compute().dump(2) << '\n';
  std::cout << "wrote " << path << '\n';
  return 0;
}
