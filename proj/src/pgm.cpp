#include "pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <stovamp/errors.hpp>

namespace stovamp::cli {

namespace {

std::string read_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Reader {
public:
  explicit Reader(const std::string &bytes) : b_(bytes) {}

  [[noreturn]] void fail(const std::string &what) const {
    throw FormatError("PGM: " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') {
          ++pos_;
        }
      } else if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space();
    if (pos_ >= b_.size()) {
      fail("unexpected end of file");
    }
    if (!std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      fail("expected a decimal number");
    }
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 100000000L) {
        fail("number too large");
      }
      ++pos_;
    }
    return v;
  }

  std::size_t pos_ = 0;
  const std::string &b_;
};

} // namespace

Image parse_pgm(const std::string &bytes) {
  Reader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    r.fail("missing P2/P5 magic number");
  }
  const bool binary = bytes[1] == '5';
  r.pos_ = 2;
  if (r.pos_ < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[r.pos_])) && bytes[r.pos_] != '#') {
    r.fail("missing P2/P5 magic number");
  }
  const long width = r.number();
  const long height = r.number();
  const long maxval = r.number();
  if (width < 1 || height < 1) {
    r.fail("non-positive image size");
  }
  if (maxval < 1 || maxval > 65535) {
    r.fail("maxval outside 1..65535");
  }
  const long count = width * height;
  Image img{static_cast<int>(height), static_cast<int>(width), ComplexVector<double>(count)};
  if (binary) {
    if (r.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos_]))) {
      r.fail("expected a single whitespace byte before the raster");
    }
    ++r.pos_;
    const std::size_t depth = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(count) * depth;
    if (bytes.size() - r.pos_ < need) {
      r.pos_ = bytes.size();
      r.fail("truncated raster (expected " + std::to_string(need) + " bytes)");
    }
    for (long i = 0; i < count; ++i) {
      const auto *p = reinterpret_cast<const unsigned char *>(bytes.data() + r.pos_ + i * depth);
      const long v = depth == 2 ? (long(p[0]) << 8) | p[1] : p[0];
      if (v > maxval) {
        r.pos_ += i * depth;
        r.fail("sample exceeds maxval");
      }
      img.pixels[i] = double(v) / double(maxval);
    }
  } else {
    for (long i = 0; i < count; ++i) {
      const long v = r.number();
      if (v > maxval) {
        r.fail("sample exceeds maxval");
      }
      img.pixels[i] = double(v) / double(maxval);
    }
  }
  return img;
}

Image load_pgm(const std::string &path) {
  try {
    return parse_pgm(read_bytes(path));
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_pgm(const std::string &path, int height, int width, const RealVector<double> &values) {
  if (values.size() != Eigen::Index(height) * width) {
    throw DimensionError("write_pgm: pixel count does not match " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write '" + path + "'");
  }
  out << "P5\n" << width << " " << height << "\n255\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  if (!out) {
    throw FormatError("write failed for '" + path + "'");
  }
}

RealVector<double> synthetic_scene(int height, int width) {
  RealVector<double> img(Eigen::Index(height) * width);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double y = double(i) / height, x = double(j) / width;
      double v = 0.5 + 0.3 * std::sin(8 * x) * std::cos(5 * y);
      if ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.1) {
        v += 0.2;
      }
      img[Eigen::Index(i) * width + j] = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

std::uint64_t fnv1a(const std::string &bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_hash(const std::string &path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(read_bytes(path))));
  return buf;
}

} // namespace stovamp::cli
