// Writes the synthetic 8-bit test scene used by the CDP configs.
// usage: make_test_image <out.pgm> [height width]

#include <iostream>
#include <string>

#include "pgm.hpp"

int main(int argc, char **argv) {
  if (argc != 2 && argc != 4) {
    std::cerr << "usage: make_test_image <out.pgm> [height width]\n";
    return 2;
  }
  const int h = argc == 4 ? std::stoi(argv[2]) : 256;
  const int w = argc == 4 ? std::stoi(argv[3]) : 256;
  try {
    stovamp::cli::write_pgm(argv[1], h, w, stovamp::cli::synthetic_scene(h, w));
  } catch (const std::exception &e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
