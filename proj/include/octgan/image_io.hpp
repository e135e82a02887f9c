#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "octgan/array.hpp"

namespace octgan::io {

struct GrayImage {
    Image pixels;
    // Largest representable pixel value of the source encoding (255, 65535,
    // or 1.0 for floating-point TIFF).
    double full_scale = 255.0;
};

// Reads PNG/TIFF (any bit depth) as single-channel; colour is converted to gray.
GrayImage read_gray(const std::filesystem::path& path);

// Linearly maps [lo, hi] to the full 8/16-bit range, clamping outside values.
std::vector<std::uint8_t> encode_png8(const Image& image, double lo, double hi);
void write_png8(const std::filesystem::path& path, const Image& image, double lo, double hi);
void write_png16(const std::filesystem::path& path, const Image& image, double lo, double hi);

// Row-major grid of tiles (cells sized to the largest tile), separated by
// `gap` pixels of `background`.
Image compose_panel(const std::vector<Image>& tiles, std::size_t columns, double background, std::size_t gap);
void write_panel_png8(const std::filesystem::path& path, const std::vector<Image>& tiles, std::size_t columns,
                      double lo, double hi);

Image resize_bilinear(const Image& image, std::size_t rows, std::size_t cols);

}  // namespace octgan::io
