#include "camiqa/image.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace camiqa {

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes(static_cast<size_t>(image.width) * image.height * 3, '\0');
  for (Eigen::Index i = 0; i < image.pixels.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(image.pixels(i, c), 0.0, 1.0);
      bytes[static_cast<size_t>(i) * 3 + static_cast<size_t>(c)] =
          static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  if (next_token(in) != "P6") throw DataError(path.string() + ": not a binary PPM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError(path.string() + ": unsupported PPM");
  std::string bytes(static_cast<size_t>(w) * h * 3, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DataError(path.string() + ": truncated pixel data");
  }
  Image img(w, h);
  for (Eigen::Index i = 0; i < img.pixels.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      img.pixels(i, c) =
          static_cast<unsigned char>(bytes[static_cast<size_t>(i) * 3 + static_cast<size_t>(c)]) /
          255.0;
    }
  }
  return img;
}

Image resize_bilinear(const Image& src, int width, int height) {
  if (width == src.width && height == src.height) return src;
  Image dst(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ly = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double lx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        dst.at(x, y, c) = (1 - ly) * ((1 - lx) * src.at(x0, y0, c) + lx * src.at(x1, y0, c)) +
                          ly * ((1 - lx) * src.at(x0, y1, c) + lx * src.at(x1, y1, c));
      }
    }
  }
  return dst;
}

Image crop(const Image& src, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || x0 + width > src.width || y0 + height > src.height) {
    throw DataError("crop window outside image");
  }
  Image dst(width, height);
  for (int y = 0; y < height; ++y) {
    dst.pixels.middleRows(static_cast<Eigen::Index>(y) * width, width) =
        src.pixels.middleRows(static_cast<Eigen::Index>(y + y0) * src.width + x0, width);
  }
  return dst;
}

Image flip_horizontal(const Image& src) {
  Image dst(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      dst.pixels.row(y * src.width + x) = src.pixels.row(y * src.width + (src.width - 1 - x));
  return dst;
}

Image flip_vertical(const Image& src) {
  Image dst(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    dst.pixels.middleRows(static_cast<Eigen::Index>(y) * src.width, src.width) =
        src.pixels.middleRows(static_cast<Eigen::Index>(src.height - 1 - y) * src.width,
                              src.width);
  return dst;
}

Box flip_box_horizontal(const Box& b, int width) { return {width - b.x1, b.y0, width - b.x0, b.y1}; }

Box flip_box_vertical(const Box& b, int height) {
  return {b.x0, height - b.y1, b.x1, height - b.y0};
}

Box scale_box(const Box& b, double sx, double sy) {
  return {b.x0 * sx, b.y0 * sy, b.x1 * sx, b.y1 * sy};
}

std::optional<Box> crop_box(const Box& b, int x0, int y0, int width, int height) {
  Box r{std::clamp(b.x0 - x0, 0.0, static_cast<double>(width)),
        std::clamp(b.y0 - y0, 0.0, static_cast<double>(height)),
        std::clamp(b.x1 - x0, 0.0, static_cast<double>(width)),
        std::clamp(b.y1 - y0, 0.0, static_cast<double>(height))};
  if (r.x1 <= r.x0 || r.y1 <= r.y0) return std::nullopt;
  return r;
}

Image contact_sheet(std::span<const Image> images, int gap) {
  if (images.empty()) return {};
  int width = 0, height = 0;
  for (const auto& im : images) {
    width += im.width;
    height = std::max(height, im.height);
  }
  width += gap * static_cast<int>(images.size() - 1);
  Image sheet(width, height);
  sheet.pixels.setOnes();
  int off = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) sheet.pixels.row(y * width + off + x) = im.pixels.row(y * im.width + x);
    off += im.width + gap;
  }
  return sheet;
}

}  // namespace camiqa
