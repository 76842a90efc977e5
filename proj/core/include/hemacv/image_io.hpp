#pragma once

#include <filesystem>

#include "hemacv/image.hpp"

namespace hemacv {

// Decodes a PNG or JPEG file (sniffed by signature) into 8-bit RGB.
// Grayscale and paletted inputs are expanded; alpha is dropped.
RgbImage read_image(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG. Output bytes are a deterministic function of the
// pixel data.
void write_png(const std::filesystem::path& path, const RgbImage& img);

// 8-bit grayscale PNG, raw sample values preserved (fixture ground truth
// uses these as label maps).
void write_gray_png(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_gray_png(const std::filesystem::path& path);

// Masks serialize as 8-bit grayscale PNG, background = 0, foreground = 255.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

// Reads a grayscale PNG back into a mask; any nonzero sample is foreground.
BinaryMask read_mask_png(const std::filesystem::path& path);

} // namespace hemacv
