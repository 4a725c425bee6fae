#include "kprune/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "kprune/errors.hpp"

namespace kprune {
namespace {

struct Header {
  std::size_t width = 0, height = 0, maxval = 0;
};

void skip_space_and_comments(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

Header read_header(std::istream& in, const char* magic, const std::filesystem::path& path) {
  std::string m;
  in >> m;
  if (m != magic) throw LoadError(LoadErrorKind::kBadMagic, path.string() + ": expected netpbm " + magic);
  Header h;
  skip_space_and_comments(in);
  in >> h.width;
  skip_space_and_comments(in);
  in >> h.height;
  skip_space_and_comments(in);
  in >> h.maxval;
  if (!in || h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 255) {
    throw LoadError(LoadErrorKind::kMalformed, path.string() + ": bad netpbm header");
  }
  in.get();  // single whitespace before the raster
  return h;
}

std::vector<unsigned char> read_raster(std::istream& in, std::size_t n, const std::filesystem::path& path) {
  std::vector<unsigned char> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw LoadError(LoadErrorKind::kTruncated, path.string() + ": truncated raster");
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw LoadError(LoadErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError(LoadErrorKind::kIo, "cannot open '" + path.string() + "'");
  return f;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw DimensionError("write_ppm: image must be [3,H,W]");
  const std::size_t h = image.dim(1), w = image.dim(2);
  auto f = open_out(path);
  f << "P6\n" << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> buf(3 * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        buf[(y * w + x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Tensor read_ppm(const std::filesystem::path& path) {
  auto f = open_in(path);
  const Header h = read_header(f, "P6", path);
  const auto buf = read_raster(f, 3 * h.width * h.height, path);
  Tensor img({3, h.height, h.width});
  for (std::size_t y = 0; y < h.height; ++y) {
    for (std::size_t x = 0; x < h.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(c, y, x) = static_cast<float>(buf[(y * h.width + x) * 3 + c]) / static_cast<float>(h.maxval);
      }
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const SegMask& mask) {
  auto f = open_out(path);
  f << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(mask.labels.data()), static_cast<std::streamsize>(mask.labels.size()));
}

SegMask read_pgm(const std::filesystem::path& path) {
  auto f = open_in(path);
  const Header h = read_header(f, "P5", path);
  SegMask m(h.height, h.width);
  const auto buf = read_raster(f, h.width * h.height, path);
  std::copy(buf.begin(), buf.end(), m.labels.begin());
  return m;
}

}  // namespace kprune
