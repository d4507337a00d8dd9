#pragma once

#include <cstdint>
#include <string>

#include <stovamp/core.hpp>

namespace stovamp::cli {

/// Grayscale image, pixels in [0, 1] stored row-major as real parts.
struct Image {
  int height = 0;
  int width = 0;
  ComplexVector<double> pixels;
};

/// Read a P2 (ASCII) or P5 (binary) PGM with maxval <= 65535.
Image load_pgm(const std::string &path);
Image parse_pgm(const std::string &bytes);

/// Write 8-bit binary PGM; values are clamped to [0, 1] and scaled by 255.
void write_pgm(const std::string &path, int height, int width, const RealVector<double> &values);

/// Smooth synthetic test scene: a sinusoidal texture plus a bright disc.
RealVector<double> synthetic_scene(int height, int width);

/// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string file_hash(const std::string &path);
std::uint64_t fnv1a(const std::string &bytes);

} // namespace stovamp::cli
