#pragma once

#include "camiqa/types.hpp"

#include <filesystem>
#include <span>

namespace camiqa {

/// Binary PPM (P6, 8-bit). Values are quantized to 1/255 steps on write.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

/// Bilinear resize with pixel-centre alignment.
Image resize_bilinear(const Image& src, int width, int height);
Image crop(const Image& src, int x0, int y0, int width, int height);
Image flip_horizontal(const Image& src);
Image flip_vertical(const Image& src);

Box flip_box_horizontal(const Box& b, int width);
Box flip_box_vertical(const Box& b, int height);
Box scale_box(const Box& b, double sx, double sy);
/// Translates by (-x0, -y0) and clips to [0,width]x[0,height]; nullopt if empty.
std::optional<Box> crop_box(const Box& b, int x0, int y0, int width, int height);

/// Lays images left-to-right in a single row (used for ranked contact sheets).
Image contact_sheet(std::span<const Image> images, int gap = 2);

}  // namespace camiqa
